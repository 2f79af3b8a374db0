#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pqfl/error.hpp"
#include "pqfl/learning.hpp"

using namespace pqfl;
using namespace pqfl::learning;

#ifndef PQFL_TEST_DATA_DIR
#error "PQFL_TEST_DATA_DIR must be defined"
#endif

namespace {

const std::filesystem::path kData = PQFL_TEST_DATA_DIR;

std::vector<double> random_point(std::mt19937_64& rng, std::size_t n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Central differences of the full objective.
std::vector<double> numeric_gradient(const Objective& f, std::vector<double> w, double h) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + h;
    const double up = f.value(w);
    w[i] = saved - h;
    const double down = f.value(w);
    w[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Nearest-centroid rule: an independent linear classifier for the sanity fit.
double nearest_centroid_accuracy(const Dataset& d) {
  const auto C = static_cast<std::size_t>(d.n_classes());
  std::vector<double> centroid(C * d.dim(), 0.0);
  std::vector<double> count(C, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto y = static_cast<std::size_t>(d.label(i));
    count[y] += 1;
    for (std::size_t k = 0; k < d.dim(); ++k) centroid[y * d.dim() + k] += d.row(i)[k];
  }
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < d.dim(); ++k) centroid[c * d.dim() + k] /= count[c];
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    double best_dist = INFINITY;
    for (std::size_t c = 0; c < C; ++c) {
      double dist = 0;
      for (std::size_t k = 0; k < d.dim(); ++k) {
        dist += std::pow(d.row(i)[k] - centroid[c * d.dim() + k], 2);
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    correct += best == static_cast<std::size_t>(d.label(i));
  }
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

Dataset three_sample_fixture() {
  return Dataset({1, 0, 0, 1, 1, 1}, 2, {0, 1, 2}, 3);
}

}  // namespace

TEST_CASE("Dataset invariants") {
  CHECK_THROWS_AS(Dataset({1, 2}, 1, {0, 0}, 2), DomainError);     // class 1 missing
  CHECK_THROWS_AS(Dataset({1, 2}, 1, {0, 2}, 2), DomainError);     // label out of range
  CHECK_THROWS_AS(Dataset({1, 2, 3}, 1, {0, 1}, 2), DomainError);  // shape
  CHECK_THROWS_AS(Dataset({1, NAN}, 1, {0, 1}, 2), DomainError);
  CHECK_NOTHROW(Dataset({1, 2}, 1, {1, 0}, 2));
}

TEST_CASE("make_synthetic") {
  SUBCASE("deterministic under seed") {
    CHECK(make_synthetic(9, 200, 4, 3, 2.0) == make_synthetic(9, 200, 4, 3, 2.0));
    CHECK_FALSE(make_synthetic(9, 200, 4, 3, 2.0) == make_synthetic(10, 200, 4, 3, 2.0));
  }
  SUBCASE("n_samples = C gives one sample per class") {
    const auto d = make_synthetic(1, 7, 7, 2, 1.0);
    std::vector<int> labels = d.labels();
    std::sort(labels.begin(), labels.end());
    CHECK(labels == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  }
  SUBCASE("well separated two-class problem is linearly separable") {
    const auto d = make_synthetic(42, 1000, 2, 2, 10.0);
    CHECK(nearest_centroid_accuracy(d) >= 0.99);
  }
  SUBCASE("class centers respect the separation") {
    // Class means of a large sample approximate the centers.
    const double sep = 3.0;
    const auto d = make_synthetic(5, 20000, 9, 2, sep);
    std::vector<double> mean(9 * 2, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (int k = 0; k < 2; ++k) mean[static_cast<std::size_t>(d.label(i)) * 2 + k] += d.row(i)[k] / (20000.0 / 9);
    }
    for (int a = 0; a < 9; ++a) {
      for (int b = a + 1; b < 9; ++b) {
        CHECK(std::hypot(mean[a * 2] - mean[b * 2], mean[a * 2 + 1] - mean[b * 2 + 1]) >= sep - 0.15);
      }
    }
  }
  SUBCASE("degenerate parameters") {
    CHECK_THROWS_AS(make_synthetic(1, 10, 1, 2, 1.0), DomainError);
    CHECK_THROWS_AS(make_synthetic(1, 10, 2, 1, 1.0), DomainError);
    CHECK_THROWS_AS(make_synthetic(1, 2, 3, 2, 1.0), DomainError);
    CHECK_THROWS_AS(make_synthetic(1, 10, 2, 2, 0.0), DomainError);
  }
}

TEST_CASE("load_idx on the hand-built fixture") {
  const auto d = load_idx(kData / "mnist4-images.idx3-ubyte", kData / "mnist4-labels.idx1-ubyte");
  CHECK(d.size() == 4);
  CHECK(d.dim() == 784);
  CHECK(d.n_classes() == 4);
  CHECK(d.labels() == std::vector<int>{2, 0, 3, 1});
  // pixel (i, p) = (7i + 3p) mod 256
  CHECK(d.row(1)[5] == doctest::Approx(((7 + 15) % 256) / 255.0));
  CHECK(d.row(3)[783] == doctest::Approx(((21 + 3 * 783) % 256) / 255.0));
  const auto [lo, hi] = std::minmax_element(d.features().begin(), d.features().end());
  CHECK(*lo >= 0.0);
  CHECK(*hi <= 1.0);
}

TEST_CASE("load_idx errors") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const ParseError& e) {
      return e.kind();
    }
    FAIL("expected ParseError");
    return ParseErrorKind::kIo;
  };
  CHECK(kind_of([] { load_idx(kData / "mnist4-images.idx3-ubyte", kData / "mnist4-labels-badmagic.idx1-ubyte"); }) ==
        ParseErrorKind::kBadMagic);
  // Labels passed as images.
  CHECK(kind_of([] { load_idx(kData / "mnist4-labels.idx1-ubyte", kData / "mnist4-labels.idx1-ubyte"); }) ==
        ParseErrorKind::kBadMagic);
  CHECK(kind_of([] { load_idx(kData / "mnist4-images-truncated.idx3-ubyte", kData / "mnist4-labels.idx1-ubyte"); }) ==
        ParseErrorKind::kTruncated);
  CHECK(kind_of([] { load_idx(kData / "mnist4-images.idx3-ubyte", kData / "mnist3-labels.idx1-ubyte"); }) ==
        ParseErrorKind::kCountMismatch);
  CHECK(kind_of([] { load_idx(kData / "missing", kData / "mnist4-labels.idx1-ubyte"); }) == ParseErrorKind::kIo);
}

TEST_CASE("IDX writer round trips through the loader") {
  const auto dir = std::filesystem::temp_directory_path() / "pqfl_idx_rt";
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> pixels(3 * 4 * 5);
  std::iota(pixels.begin(), pixels.end(), std::uint8_t{0});
  write_idx_images(dir / "i", 4, 5, pixels);
  write_idx_labels(dir / "l", std::vector<std::uint8_t>{1, 0, 1});
  const auto d = load_idx(dir / "i", dir / "l");
  CHECK(d.size() == 3);
  CHECK(d.dim() == 20);
  CHECK(d.row(2)[19] == doctest::Approx(59 / 255.0));
  std::filesystem::remove_all(dir);
}

TEST_CASE("write_csv") {
  std::ostringstream os;
  write_csv(os, Dataset({0.5, -1, 2, 3}, 2, {1, 0}, 2));
  CHECK(os.str() == "label,f0,f1\n1,0.5,-1\n0,2,3\n");
}

TEST_CASE("cycle_m_partition") {
  SUBCASE("n_clients = C, m = 1: one distinct class each") {
    const auto d = make_synthetic(3, 100, 5, 2, 1.0);
    const auto p = cycle_m_partition(d, 5, 1);
    const auto h = class_histogram(d, p);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t c = 0; c < 5; ++c) CHECK((h[i][c] > 0) == (i == c));
    }
  }
  SUBCASE("m = C: every client sees all classes") {
    const auto d = make_synthetic(3, 200, 4, 2, 1.0);
    const auto h = class_histogram(d, cycle_m_partition(d, 6, 4));
    for (const auto& row : h) {
      for (auto count : row) CHECK(count > 0);
    }
  }
  SUBCASE("hand-enumerated 41-sample fixture, C=10, n=10, m=2") {
    std::vector<int> labels(41);
    for (int i = 0; i < 41; ++i) labels[static_cast<std::size_t>(i)] = i % 10;
    const Dataset d(std::vector<double>(41, 0.0), 1, labels, 10);
    const auto p = cycle_m_partition(d, 10, 2);
    CHECK(p.classes_of(0) == std::vector<int>{0, 1});
    CHECK(p.classes_of(9) == std::vector<int>{9, 0});
    // class 0 = rows {0,10,20,30,40}, claimed by clients 0 and 9; client 0 takes the extra one.
    CHECK(p.assignment[0] == std::vector<std::size_t>{0, 1, 10, 11, 20});
    CHECK(p.assignment[9] == std::vector<std::size_t>{29, 30, 39, 40});
    CHECK(p.assignment[1] == std::vector<std::size_t>{2, 12, 21, 31});
  }
  SUBCASE("invariants over random configurations") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
      const int C = 2 + static_cast<int>(rng() % 9);
      const auto d = make_synthetic(rng(), 50 + rng() % 300, C, 2, 1.0);
      const std::size_t n = 1 + rng() % 15;
      const int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(C));
      const auto p = cycle_m_partition(d, n, m);
      std::set<std::size_t> seen;
      std::set<int> covered;
      for (std::size_t i = 0; i < n; ++i) {
        const auto allowed = p.classes_of(i);
        covered.insert(allowed.begin(), allowed.end());
        std::set<int> labels_of_shard;
        for (auto idx : p.assignment[i]) {
          CHECK(seen.insert(idx).second);  // disjoint
          labels_of_shard.insert(d.label(idx));
        }
        for (int y : labels_of_shard) CHECK(std::find(allowed.begin(), allowed.end(), y) != allowed.end());
        // Exactly the window whenever each class has enough samples for its claimants.
        if (d.size() / static_cast<std::size_t>(C) >= n) {
          CHECK(labels_of_shard == std::set<int>(allowed.begin(), allowed.end()));
        }
      }
      std::size_t expected = 0;
      for (std::size_t i = 0; i < d.size(); ++i) expected += covered.count(d.label(i));
      CHECK(seen.size() == expected);  // covers every sample of a claimed class
      // Even split: claimants of a class differ by at most one sample.
      const auto h = class_histogram(d, p);
      for (int c = 0; c < C; ++c) {
        std::vector<std::size_t> counts;
        for (std::size_t i = 0; i < n; ++i) {
          const auto a = p.classes_of(i);
          if (std::find(a.begin(), a.end(), c) != a.end()) counts.push_back(h[i][static_cast<std::size_t>(c)]);
        }
        if (!counts.empty()) {
          const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
          CHECK(*hi - *lo <= 1);
        }
      }
    }
  }
  SUBCASE("errors") {
    const auto d = make_synthetic(3, 100, 5, 2, 1.0);
    CHECK_THROWS_AS(cycle_m_partition(d, 5, 6), DomainError);
    CHECK_THROWS_AS(cycle_m_partition(d, 5, 0), DomainError);
    CHECK_THROWS_AS(cycle_m_partition(d, 0, 1), DomainError);
  }
}

TEST_CASE("local_sgd on the 1-D quadratic") {
  const QuadraticObjective f({3.0});
  SGDConfig cfg;
  cfg.steps = 200;
  cfg.eta0 = 0.1;
  cfg.schedule = StepSchedule::kConstant;
  const auto r = local_sgd(ParamVector({0.0}), f, cfg);
  CHECK(std::abs(r.params[0] - 3.0) < 1e-3);
  CHECK(r.loss_trace.size() == 200);

  cfg.steps = 0;
  CHECK_THROWS_AS(local_sgd(ParamVector({0.0}), f, cfg), DomainError);
  cfg.steps = 1;
  cfg.eta0 = 0.0;
  CHECK_THROWS_AS(local_sgd(ParamVector({0.0}), f, cfg), DomainError);
}

TEST_CASE("local_sgd reports divergence with the step index") {
  const QuadraticObjective f({3.0});
  SGDConfig cfg;
  cfg.steps = 5000;
  cfg.eta0 = 5.0;  // |1 - 2*eta| > 1 blows up
  cfg.schedule = StepSchedule::kConstant;
  try {
    local_sgd(ParamVector({0.0}), f, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() < 5000);
  }
}

TEST_CASE("softmax gradient matches central finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = make_synthetic(seed, 60, 4, 3, 2.0);
    const SoftmaxRegression f(DatasetView(d), SoftmaxModel::for_dataset(d, 1e-3));
    std::mt19937_64 rng(seed * 101);
    std::vector<double> g(f.num_params());
    for (int point = 0; point < 20; ++point) {
      const auto w = random_point(rng, f.num_params(), 1.0);
      f.full_gradient(w, g);
      const auto num = numeric_gradient(f, w, 1e-5);
      std::vector<double> diff(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - num[i];
      CHECK(norm(diff) / std::max(norm(num), 1e-12) < 1e-4);
    }
  }
}

TEST_CASE("softmax objective is convex along random chords") {
  const auto d = make_synthetic(4, 80, 3, 2, 2.0);
  const SoftmaxRegression f(DatasetView(d), SoftmaxModel::for_dataset(d));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> mid(f.num_params());
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_point(rng, f.num_params(), 3.0);
    const auto y = random_point(rng, f.num_params(), 3.0);
    const double t = unit(rng);
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = t * x[k] + (1 - t) * y[k];
    REQUIRE(f.value(mid) <= t * f.value(x) + (1 - t) * f.value(y) + 1e-9);
  }
}

TEST_CASE("smoothness estimate is finite and stable across seeds") {
  const auto d = make_synthetic(42, 300, 3, 4, 2.0);
  const SoftmaxRegression f(DatasetView(d), SoftmaxModel::for_dataset(d));
  std::vector<double> estimates;
  for (std::uint64_t s = 1; s <= 4; ++s) estimates.push_back(estimate_smoothness(f, s));
  const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
  CHECK(std::isfinite(*hi));
  CHECK(*lo > 0);
  const double mid = 0.5 * (*lo + *hi);
  CHECK(*hi <= 1.25 * mid);
  CHECK(*lo >= 0.75 * mid);
}

TEST_CASE("evaluate") {
  SUBCASE("hand-computed three-sample fixture") {
    const auto d = three_sample_fixture();
    const SoftmaxModel model{3, 2, 0.1};
    const ParamVector w({1, -1, 0.5, 2, -1, 0.25, 0.1, -0.2, 0.3});
    const auto e = evaluate(w, d, model);
    // mean CE 1.2309976333517527 + reg 0.372625 (computed by hand in Python)
    CHECK(e.loss == doctest::Approx(1.6036226333517527).epsilon(1e-12));
    CHECK(e.accuracy == doctest::Approx(2.0 / 3.0));
    const SoftmaxRegression f(DatasetView(d), model);
    CHECK(f.value(w.view()) == doctest::Approx(1.6036226333517527).epsilon(1e-12));
  }
  SUBCASE("zero params predict class 0 (lowest index on ties)") {
    const Dataset d({0, 0, 0, 0, 0, 0, 0, 0}, 2, {2, 1, 1, 0}, 3);
    const SoftmaxModel model{3, 2, 1e-3};
    const auto e = evaluate(ParamVector(std::vector<double>(9, 0.0)), d, model);
    CHECK(e.accuracy == doctest::Approx(0.25));
    CHECK(e.loss == doctest::Approx(std::log(3.0)));
  }
  SUBCASE("sanity fit reaches 99% on a separable problem") {
    const auto d = make_synthetic(42, 1000, 2, 2, 10.0);
    const auto model = SoftmaxModel::for_dataset(d);
    const SoftmaxRegression f(DatasetView(d), model);
    const auto fitted = minimize_full_batch(f, ParamVector(std::vector<double>(model.num_params(), 0.0)));
    const auto e = evaluate(fitted, d, model);
    CHECK(e.accuracy >= 0.99);
    CHECK(e.accuracy <= 1.0);
    CHECK(e.loss == evaluate(fitted, d, model).loss);
  }
  SUBCASE("dimension mismatch") {
    const auto d = three_sample_fixture();
    CHECK_THROWS_AS(evaluate(ParamVector({1.0}), d, SoftmaxModel{3, 2, 0.1}), DomainError);
    CHECK_THROWS_AS(evaluate(ParamVector(std::vector<double>(12, 0.0)), d, SoftmaxModel{3, 3, 0.1}), DomainError);
  }
}

TEST_CASE("fit_convergence on synthetic laws") {
  std::vector<double> sqrt_law(4096), inv_law(4096);
  for (std::size_t i = 0; i < sqrt_law.size(); ++i) {
    const double t = static_cast<double>(i + 1);
    sqrt_law[i] = 0.7 + 2.0 / std::sqrt(t);
    inv_law[i] = 0.7 + 5.0 / t;
  }
  CHECK(fit_convergence(sqrt_law, 0.7).fitted_exponent == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(std::abs(fit_convergence(sqrt_law, 0.7).fitted_exponent + 0.5) <= 0.01);
  CHECK(std::abs(fit_convergence(inv_law, 0.7).fitted_exponent + 1.0) <= 0.01);
  CHECK(fit_convergence(inv_law, 0.7).fit_begin == 2048);

  CHECK_THROWS_AS(fit_convergence(std::vector<double>(63, 1.0), 0.0), DomainError);
  CHECK_THROWS_AS(fit_convergence(std::vector<double>(100, 1.0), 1.0), FitError);
}

TEST_CASE("SGD on the synthetic convex problem converges at a sublinear rate") {
  const auto d = make_synthetic(42, 600, 3, 4, 2.0);
  const auto model = SoftmaxModel::for_dataset(d);
  const SoftmaxRegression f(DatasetView(d), model);
  const ParamVector zero(std::vector<double>(model.num_params(), 0.0));
  const double fstar = f.value(minimize_full_batch(f, zero).view());

  SGDConfig cfg;
  cfg.steps = 4096;
  cfg.eta0 = 0.5;
  cfg.batch_size = 8;
  cfg.seed = 42;
  const auto run = local_sgd(zero, f, cfg);
  CHECK(*std::min_element(run.loss_trace.begin(), run.loss_trace.end()) > fstar);
  const auto report = analyze_convergence(f, run, fstar, 7);
  CHECK(report.fitted_exponent >= -1.3);
  CHECK(report.fitted_exponent <= -0.35);
  CHECK(report.gradient_bound_B > 0);
  CHECK(std::isfinite(report.smoothness_estimate_L));
}

TEST_CASE("trailing-window minimum loss improves as T doubles") {
  const auto d = make_synthetic(42, 400, 3, 3, 2.0);
  const auto model = SoftmaxModel::for_dataset(d);
  const SoftmaxRegression f(DatasetView(d), model);
  double previous = INFINITY;
  for (std::size_t T = 256; T <= 4096; T *= 2) {
    SGDConfig cfg;
    cfg.steps = T;
    cfg.batch_size = 8;
    cfg.seed = 3;
    const auto run = local_sgd(ParamVector(std::vector<double>(model.num_params(), 0.0)), f, cfg);
    const double tail = *std::min_element(run.loss_trace.begin() + static_cast<std::ptrdiff_t>(T / 2), run.loss_trace.end());
    CHECK(tail <= previous);
    previous = tail;
  }
}

TEST_CASE("minimize_full_batch reaches a stationary point") {
  const auto d = make_synthetic(2, 300, 3, 2, 2.0);
  const SoftmaxRegression f(DatasetView(d), SoftmaxModel::for_dataset(d));
  const auto w = minimize_full_batch(f, ParamVector(std::vector<double>(f.num_params(), 0.0)));
  std::vector<double> g(f.num_params());
  f.full_gradient(w.view(), g);
  CHECK(norm(g) < 1e-8);
}

TEST_CASE("train_test_split is a deterministic partition") {
  const auto d = make_synthetic(1, 101, 3, 2, 1.0);
  const auto [train, test] = train_test_split(d, 0.8, 5);
  CHECK(train.size() == 81);
  CHECK(test.size() == 20);
  std::set<std::size_t> all(train.indices().begin(), train.indices().end());
  all.insert(test.indices().begin(), test.indices().end());
  CHECK(all.size() == 101);
  CHECK(train_test_split(d, 0.8, 5).first.indices() == train.indices());
  CHECK_THROWS_AS(train_test_split(d, 1.0, 5), DomainError);
}
