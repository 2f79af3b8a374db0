// Stand-alone acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pqfl/cli.hpp"
#include "pqfl/envelope.hpp"
#include "pqfl/error.hpp"
#include "pqfl/learning.hpp"
#include "pqfl/orchestrator.hpp"
#include "pqfl/pqc.hpp"
#include "pqfl/topology.hpp"
#include "test_support.hpp"

using namespace pqfl;
using namespace pqfl::learning;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Flips one random bit of the envelope: a parameter, the round, the device id,
// the public key or the signature. The result is never identical to the input.
UpdateEnvelope flip_one_bit(UpdateEnvelope e, std::mt19937_64& rng) {
  for (;;) {
    switch (rng() % 5) {
      case 0: {
        if (e.params.empty()) continue;
        auto v = e.params.values();
        const std::size_t i = rng() % v.size();
        const auto flipped = std::bit_cast<double>(std::bit_cast<std::uint64_t>(v[i]) ^ (std::uint64_t{1} << (rng() % 64)));
        if (!std::isfinite(flipped)) continue;
        v[i] = flipped;
        e.params = ParamVector(std::move(v));
        return e;
      }
      case 1:
        e.round ^= std::uint64_t{1} << (rng() % 64);
        return e;
      case 2:
        e.device_id[rng() % e.device_id.size()] ^= static_cast<char>(1 << (rng() % 7));
        return e;
      case 3:
        e.public_key[rng() % e.public_key.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        return e;
      default:
        e.signature[rng() % e.signature.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        return e;
    }
  }
}

Outcome filter_correctness() {
  const std::vector<std::pair<std::string, std::size_t>> volume = {
      {"mock", 1000}, {"dilithium2", 60}, {"falcon512", 60}, {"sphincsplus-sha2-128f", 50}};
  std::mt19937_64 rng(2024);
  std::ostringstream detail;
  bool pass = true;
  for (const auto& [scheme, count] : volume) {
    std::size_t accepted = 0, rejected = 0;
    for (std::size_t i = 0; i < count; ++i) {
      auto keys = pqc::keygen(scheme);
      const std::uint64_t round = rng() % 1000;
      const auto env = sign_update(testing::random_params(rng, 1 + rng() % 64), round,
                                   testing::random_device_id(rng), keys);
      const std::vector<UpdateEnvelope> batch = {env, flip_one_bit(env, rng)};
      const auto good = filter_updates(std::span(batch).first(1), round);
      const auto bad = filter_updates(std::span(batch).last(1), batch[1].round);
      accepted += good.accepted.size();
      rejected += bad.rejected.size();
    }
    pass = pass && accepted == count && rejected == count;
    detail << scheme << " " << accepted << "/" << count << " accepted, " << rejected << "/" << count
           << " tampered rejected; ";
  }
  return {pass, detail.str()};
}

Outcome server_resilience() {
  using namespace topology;
  const auto fixed = simulate_attack(SelectionPolicy::fixed("d0"), 10, AdversaryStrategy::guess_fixed("d0"), 10000);
  const auto uniform =
      simulate_attack(SelectionPolicy::uniform(42), 10, AdversaryStrategy::guess_fixed("d0"), 10000);
  const bool pass = fixed.hit_rate == 1.0 && uniform.hit_rate >= 0.088 && uniform.hit_rate <= 0.112 &&
                    fixed.hit_rate > uniform.hit_rate;
  char buf[128];
  std::snprintf(buf, sizeof buf, "fixed hit_rate %.4f, uniform hit_rate %.4f", fixed.hit_rate, uniform.hit_rate);
  return {pass, buf};
}

Outcome convergence_rate() {
  const auto d = make_synthetic(42, 600, 3, 4, 2.0);
  const auto model = SoftmaxModel::for_dataset(d);
  const SoftmaxRegression f(DatasetView(d), model);
  const ParamVector zero(std::vector<double>(model.num_params(), 0.0));
  const double fstar = f.value(minimize_full_batch(f, zero).view());
  SGDConfig cfg;
  cfg.steps = 4096;
  cfg.eta0 = 0.5;
  cfg.schedule = StepSchedule::kInvSqrt;
  cfg.batch_size = 8;
  cfg.seed = 42;
  const double sgd_exponent = fit_convergence(local_sgd(zero, f, cfg).loss_trace, fstar).fitted_exponent;

  std::vector<double> sqrt_law(4096), inv_law(4096);
  for (std::size_t i = 0; i < 4096; ++i) {
    const double t = static_cast<double>(i + 1);
    sqrt_law[i] = 1.5 + 3.0 / std::sqrt(t);
    inv_law[i] = 1.5 + 3.0 / t;
  }
  const double a = fit_convergence(sqrt_law, 1.5).fitted_exponent;
  const double b = fit_convergence(inv_law, 1.5).fitted_exponent;
  const bool pass = sgd_exponent <= -0.35 && std::abs(a + 0.5) <= 0.01 && std::abs(b + 1.0) <= 0.01;
  char buf[160];
  std::snprintf(buf, sizeof buf, "SGD exponent %.3f, c/sqrt(t) -> %.4f, c/t -> %.4f", sgd_exponent, a, b);
  return {pass, buf};
}

Outcome timing_ordering() {
  const auto dil = pqc::timing_probe("dilithium2", 8192, 30);
  const auto fal = pqc::timing_probe("falcon512", 8192, 30);
  const auto sph = pqc::timing_probe("sphincsplus-sha2-128f", 8192, 30);
  const double d = static_cast<double>(dil.sign.median_ns);
  const double f = static_cast<double>(fal.sign.median_ns);
  const double s = static_cast<double>(sph.sign.median_ns);
  const double ratio = std::max(d, f) / std::min(d, f);
  const bool pass = s > 2 * d && ratio <= 10.0;
  char buf[200];
  std::snprintf(buf, sizeof buf, "median sign ns: dilithium2 %.0f, falcon512 %.0f, sphincs+ %.0f (%.1fx dilithium); dilithium/falcon spread %.2fx",
                d, f, s, s / d, ratio);
  return {pass, buf};
}

Outcome non_iid_gap() {
  auto final_accuracy = [](int m) {
    ExperimentConfig c;
    c.n_devices = 10;
    c.rounds = 100;
    c.scheme_id = "mock";
    c.m = m;
    c.seed = 42;
    Simulation sim(c);
    RoundLog last;
    for (std::uint64_t r = 0; r < c.rounds; ++r) last = sim.run_round(r);
    return last.test_accuracy;
  };
  const double iid = final_accuracy(10);
  const double skewed = final_accuracy(1);
  char buf[128];
  std::snprintf(buf, sizeof buf, "test accuracy m=C %.4f, m=1 %.4f, gap %.1f pp", iid, skewed, 100 * (iid - skewed));
  return {iid - skewed >= 0.05, buf};
}

Outcome assumption_suite() {
  std::size_t fd_fail = 0, fd_total = 0, convex_fail = 0, avg_fail = 0;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto d = make_synthetic(seed, 60, 4, 3, 2.0);
    const SoftmaxRegression f(DatasetView(d), SoftmaxModel::for_dataset(d));
    std::vector<double> w(f.num_params()), g(f.num_params());
    for (int point = 0; point < 20; ++point) {
      for (auto& x : w) x = normal(rng);
      f.full_gradient(w, g);
      double diff = 0, ref = 0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double saved = w[i];
        w[i] = saved + 1e-5;
        const double up = f.value(w);
        w[i] = saved - 1e-5;
        const double down = f.value(w);
        w[i] = saved;
        const double num = (up - down) / 2e-5;
        diff += (num - g[i]) * (num - g[i]);
        ref += num * num;
      }
      ++fd_total;
      fd_fail += std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12) >= 1e-4;
    }
  }
  {
    const auto d = make_synthetic(4, 80, 3, 2, 2.0);
    const SoftmaxRegression f(DatasetView(d), SoftmaxModel::for_dataset(d));
    std::uniform_real_distribution<double> unit(0, 1);
    std::vector<double> x(f.num_params()), y(x.size()), mid(x.size());
    for (int i = 0; i < 1000; ++i) {
      for (auto& v : x) v = 3 * normal(rng);
      for (auto& v : y) v = 3 * normal(rng);
      const double t = unit(rng);
      for (std::size_t k = 0; k < x.size(); ++k) mid[k] = t * x[k] + (1 - t) * y[k];
      convex_fail += f.value(mid) > t * f.value(x) + (1 - t) * f.value(y) + 1e-9;
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng() % 12, n = 1 + rng() % 40;
    std::vector<ParamVector> updates;
    for (std::size_t j = 0; j < k; ++j) updates.push_back(testing::random_params(rng, n, 100.0));
    const auto avg = fed_avg(updates);
    for (std::size_t i = 0; i < n; ++i) {
      long double sum = 0;
      for (const auto& u : updates) sum += u[i];
      avg_fail += std::abs(static_cast<long double>(avg[i]) - sum / k) > 1e-12L;
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "finite-difference %zu/%zu ok, convexity 1000 triples with %zu violations, fed_avg oracle mismatches %zu",
                fd_total - fd_fail, fd_total, convex_fail, avg_fail);
  return {fd_fail == 0 && convex_fail == 0 && avg_fail == 0, buf};
}

std::vector<std::string> csv_without_time_columns(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    cells.resize(cells.size() - kRoundCsvTimeColumns);
    std::string joined;
    for (const auto& c : cells) joined += c + ",";
    rows.push_back(joined);
  }
  return rows;
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "pqfl_acceptance_determinism";
  std::filesystem::remove_all(base);
  std::vector<std::vector<std::string>> runs;
  for (const char* name : {"a", "b"}) {
    const std::string out = (base / name).string();
    const char* argv[] = {"pqfl", "run", "--devices", "4", "--rounds", "20", "--seed", "7",
                          "--scheme", "mock", "--out", out.c_str(), "--quiet"};
    std::ostringstream sink;
    if (run_cli(static_cast<int>(std::size(argv)), argv, sink, sink) != 0) return {false, "run failed: " + sink.str()};
    runs.push_back(csv_without_time_columns(base / name / "rounds.csv"));
  }
  std::filesystem::remove_all(base);
  const bool pass = runs[0].size() == 21 && runs[0] == runs[1];
  return {pass, std::to_string(runs[0].size() - 1) + " rounds compared, " + (runs[0] == runs[1] ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"filter correctness", filter_correctness},
      {"server-selection resilience", server_resilience},
      {"convergence rate", convergence_rate},
      {"scheme timing ordering", timing_ordering},
      {"non-IID degradation", non_iid_gap},
      {"gradient and assumption suite", assumption_suite},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("[%s] criterion %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
