#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pqfl/error.hpp"
#include "pqfl/learning.hpp"

namespace pqfl::learning {
namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Writes the logits of one sample into `z` and returns log-sum-exp.
double logits(std::span<const double> w, std::span<const double> x, const SoftmaxModel& m,
              std::span<double> z) {
  const std::size_t dim = m.dim;
  const std::size_t bias = static_cast<std::size_t>(m.n_classes) * dim;
  double zmax = -INFINITY;
  for (std::size_t c = 0; c < z.size(); ++c) {
    double acc = w[bias + c];
    const double* wc = w.data() + c * dim;
    for (std::size_t d = 0; d < dim; ++d) acc += wc[d] * x[d];
    z[c] = acc;
    zmax = std::max(zmax, acc);
  }
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return zmax + std::log(sum);
}

void check_params(std::span<const double> w, std::size_t expected) {
  if (w.size() != expected) {
    throw DomainError("parameter count " + std::to_string(w.size()) + " != model size " +
                      std::to_string(expected));
  }
}

}  // namespace

double Objective::full_gradient(std::span<const double> w, std::span<double> grad) const {
  std::vector<std::size_t> all(num_samples());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return value_and_gradient(w, all, grad);
}

double QuadraticObjective::value(std::span<const double> w) const {
  check_params(w, center_.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - center_[i]) * (w[i] - center_[i]);
  return s;
}

double QuadraticObjective::value_and_gradient(std::span<const double> w,
                                              std::span<const std::size_t>,
                                              std::span<double> grad) const {
  check_params(w, center_.size());
  for (std::size_t i = 0; i < w.size(); ++i) grad[i] = 2.0 * (w[i] - center_[i]);
  return value(w);
}

SoftmaxModel SoftmaxModel::for_dataset(const Dataset& data, double rho) {
  return SoftmaxModel{data.n_classes(), data.dim(), rho};
}

SoftmaxRegression::SoftmaxRegression(DatasetView data, SoftmaxModel model)
    : data_(std::move(data)), model_(model) {
  if (data_.dim() != model_.dim || data_.n_classes() != model_.n_classes) {
    throw DomainError("softmax regression: dataset shape does not match the model");
  }
  if (!(model_.rho > 0.0)) throw DomainError("softmax regression: rho must be positive");
}

double SoftmaxRegression::value(std::span<const double> w) const {
  check_params(w, num_params());
  std::vector<double> z(static_cast<std::size_t>(model_.n_classes));
  double loss = 0.0;
  for (std::size_t k = 0; k < data_.size(); ++k) {
    loss += logits(w, data_.row(k), model_, z) - z[static_cast<std::size_t>(data_.label(k))];
  }
  if (!data_.empty()) loss /= static_cast<double>(data_.size());
  return loss + 0.5 * model_.rho * squared_norm(w);
}

double SoftmaxRegression::value_and_gradient(std::span<const double> w,
                                             std::span<const std::size_t> batch,
                                             std::span<double> grad) const {
  check_params(w, num_params());
  check_params(grad, num_params());
  const std::size_t classes = static_cast<std::size_t>(model_.n_classes);
  const std::size_t dim = model_.dim;
  const std::size_t bias = classes * dim;

  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> z(classes);
  double loss = 0.0;
  for (std::size_t k : batch) {
    const auto x = data_.row(k);
    const auto y = static_cast<std::size_t>(data_.label(k));
    const double lse = logits(w, x, model_, z);
    loss += lse - z[y];
    for (std::size_t c = 0; c < classes; ++c) {
      const double err = std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0);
      double* gc = grad.data() + c * dim;
      for (std::size_t d = 0; d < dim; ++d) gc[d] += err * x[d];
      grad[bias + c] += err;
    }
  }
  const double inv = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad[i] * inv + model_.rho * w[i];
  return loss * inv + 0.5 * model_.rho * squared_norm(w);
}

double SGDConfig::rate(std::size_t step) const {
  switch (schedule) {
    case StepSchedule::kConstant: return eta0;
    case StepSchedule::kInvSqrt: return eta0 / std::sqrt(static_cast<double>(step_offset + step + 1));
  }
  return eta0;
}

SgdResult local_sgd(const ParamVector& initial, const Objective& objective, const SGDConfig& config) {
  if (config.steps == 0) throw DomainError("local_sgd: steps must be >= 1");
  if (!(config.eta0 > 0.0)) throw DomainError("local_sgd: eta0 must be positive");
  if (config.batch_size == 0) throw DomainError("local_sgd: batch_size must be >= 1");
  if (objective.num_samples() == 0) throw DomainError("local_sgd: empty shard");
  check_params(initial.view(), objective.num_params());

  std::vector<double> w = initial.values();
  std::vector<double> grad(w.size());
  std::vector<std::size_t> order(objective.num_samples());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  std::size_t cursor = order.size();

  SgdResult result;
  if (config.record_trace) result.loss_trace.reserve(config.steps);
  std::vector<std::size_t> batch;
  for (std::size_t step = 0; step < config.steps; ++step) {
    batch.clear();
    const std::size_t want = std::min(config.batch_size, order.size());
    while (batch.size() < want) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    const double batch_loss = objective.value_and_gradient(w, batch, grad);
    if (!std::isfinite(batch_loss)) throw TrainingError(step, "local_sgd: loss diverged");
    result.max_gradient_norm = std::max(result.max_gradient_norm, std::sqrt(squared_norm(grad)));

    const double eta = config.rate(step);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * grad[i];

    if (config.record_trace) {
      const double f = objective.value(w);
      if (!std::isfinite(f)) throw TrainingError(step, "local_sgd: loss diverged");
      result.loss_trace.push_back(f);
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) throw TrainingError(config.steps - 1, "local_sgd: params diverged");
  }
  result.params = ParamVector(std::move(w));
  return result;
}

SgdResult local_sgd(const ParamVector& initial, const DatasetView& shard, const SoftmaxModel& model,
                    const SGDConfig& config) {
  return local_sgd(initial, SoftmaxRegression(shard, model), config);
}

Evaluation evaluate(const ParamVector& params, const DatasetView& data, const SoftmaxModel& model) {
  check_params(params.view(), model.num_params());
  if (data.dim() != model.dim || data.n_classes() != model.n_classes) {
    throw DomainError("evaluate: dataset shape does not match the model");
  }
  if (data.empty()) throw DomainError("evaluate: empty dataset");

  std::vector<double> z(static_cast<std::size_t>(model.n_classes));
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double lse = logits(params.view(), data.row(k), model, z);
    const auto y = static_cast<std::size_t>(data.label(k));
    loss += lse - z[y];
    // max_element returns the first maximum, i.e. the lowest class on ties.
    const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == y) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n + 0.5 * model.rho * squared_norm(params.view()), static_cast<double>(correct) / n};
}

Evaluation evaluate(const ParamVector& params, const Dataset& data, const SoftmaxModel& model) {
  return evaluate(params, DatasetView(data), model);
}

}  // namespace pqfl::learning
