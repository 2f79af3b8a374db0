#include <cmath>
#include <random>

#include "pqfl/error.hpp"
#include "pqfl/learning.hpp"

namespace pqfl::learning {
namespace {

constexpr std::size_t kMinTraceLength = 64;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

ConvergenceReport fit_convergence(std::span<const double> loss_trace, double optimum_estimate) {
  if (loss_trace.size() < kMinTraceLength) {
    throw DomainError("fit_convergence: trace shorter than 64 steps");
  }
  ConvergenceReport report;
  report.loss_trace.assign(loss_trace.begin(), loss_trace.end());
  report.optimum_estimate = optimum_estimate;
  report.fit_begin = loss_trace.size() / 2;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = report.fit_begin; i < loss_trace.size(); ++i) {
    const double gap = loss_trace[i] - optimum_estimate;
    if (!(gap > 0.0) || !std::isfinite(gap)) {
      throw FitError("fit_convergence: non-positive gap at step " + std::to_string(i) +
                     " (trace already at the optimum estimate)");
    }
    const double x = std::log(static_cast<double>(i + 1));
    const double y = std::log(gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const auto n = static_cast<double>(loss_trace.size() - report.fit_begin);
  report.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return report;
}

double estimate_smoothness(const Objective& objective, std::uint64_t seed, std::size_t pairs,
                           double scale) {
  const std::size_t p = objective.num_params();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coord(0.0, scale);
  std::vector<double> x(p), y(p), gx(p), gy(p);
  double best = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    for (std::size_t i = 0; i < p; ++i) {
      x[i] = coord(rng);
      y[i] = coord(rng);
    }
    objective.full_gradient(x, gx);
    objective.full_gradient(y, gy);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      num += (gx[i] - gy[i]) * (gx[i] - gy[i]);
      den += (x[i] - y[i]) * (x[i] - y[i]);
    }
    if (den > 0.0) best = std::max(best, std::sqrt(num / den));
  }
  return best;
}

ParamVector minimize_full_batch(const Objective& objective, const ParamVector& initial,
                                std::size_t max_iterations, double gradient_tolerance) {
  const std::size_t p = objective.num_params();
  std::vector<double> x = initial.values(), y = x, x_next(p), g(p), step(p);
  double t = 1.0;
  double lipschitz = 1.0;

  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double fy = objective.full_gradient(y, g);
    const double g2 = dot(g, g);
    if (std::sqrt(g2) < gradient_tolerance) {
      x = y;
      break;
    }
    // Backtracking on the sufficient-decrease condition.
    for (;;) {
      for (std::size_t i = 0; i < p; ++i) x_next[i] = y[i] - g[i] / lipschitz;
      if (objective.value(x_next) <= fy - 0.5 * g2 / lipschitz) break;
      lipschitz *= 2.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < p; ++i) step[i] = x_next[i] - x[i];
    double restart = 0.0;
    for (std::size_t i = 0; i < p; ++i) restart += (y[i] - x_next[i]) * step[i];
    if (restart > 0.0) {
      t = 1.0;
      y = x_next;
    } else {
      const double momentum = (t - 1.0) / t_next;
      for (std::size_t i = 0; i < p; ++i) y[i] = x_next[i] + momentum * step[i];
      t = t_next;
    }
    x.swap(x_next);
    lipschitz *= 0.9;
  }
  return ParamVector(std::move(x));
}

ConvergenceReport analyze_convergence(const Objective& objective, const SgdResult& run,
                                      double optimum_estimate, std::uint64_t seed) {
  ConvergenceReport report = fit_convergence(run.loss_trace, optimum_estimate);
  report.gradient_bound_B = run.max_gradient_norm;
  report.smoothness_estimate_L = estimate_smoothness(objective, seed);
  return report;
}

}  // namespace pqfl::learning
