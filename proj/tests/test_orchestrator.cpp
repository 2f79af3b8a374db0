#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pqfl/error.hpp"
#include "pqfl/orchestrator.hpp"

using namespace pqfl;

namespace {

ExperimentConfig small_config(std::size_t devices, std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.n_devices = devices;
  c.rounds = 3;
  c.scheme_id = "mock";
  c.dataset.n_samples = 400;
  c.dataset.classes = 4;
  c.seed = seed;
  c.convergence = false;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pqfl_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("honest round accepts every device") {
  Simulation sim(small_config(4));
  const auto log = sim.run_round(0);
  CHECK(log.envelopes == 4);
  CHECK(log.accepted == 4);
  CHECK(log.rejected == 0);
  CHECK_FALSE(log.degenerate);
  CHECK(log.global_digest == params_digest(sim.global_params(), "mock"));
  CHECK(log.wire_bytes > 0);
  CHECK(log.overhead_fraction >= 0.0);
  CHECK(log.overhead_fraction <= 1.0);
}

TEST_CASE("tamper adversary is rejected for bad signatures") {
  auto c = small_config(5);
  c.adversary = AdversarySpec::parse("tamper:2");
  Simulation sim(c);
  const auto log = sim.run_round(0);
  CHECK(log.accepted == 3);
  CHECK(log.rejected == 2);
  CHECK(log.rejected_for(RejectReason::kBadSignature) == 2);
}

TEST_CASE("tamper rejects exactly k for every k") {
  for (std::size_t k = 0; k <= 5; ++k) {
    auto c = small_config(5, 10 + k);
    c.adversary = AdversarySpec::parse("tamper:" + std::to_string(k));
    Simulation sim(c);
    for (std::uint64_t r = 0; r < 2; ++r) {
      const auto log = sim.run_round(r);
      CHECK(log.rejected == k);
      CHECK(log.rejected_for(RejectReason::kBadSignature) == k);
      CHECK(log.accepted + log.rejected == log.envelopes);
    }
  }
}

TEST_CASE("tampering every update leaves the model unchanged") {
  auto c = small_config(4);
  c.adversary = AdversarySpec::parse("tamper:4");
  Simulation sim(c);
  const auto initial = params_digest(sim.global_params(), "mock");
  for (std::uint64_t r = 0; r < 3; ++r) {
    const auto log = sim.run_round(r);
    CHECK(log.degenerate);
    CHECK(log.accepted == 0);
    CHECK(log.global_digest == initial);
  }
}

TEST_CASE("forged updates under a foreign key are rejected as key mismatches") {
  auto c = small_config(4);
  c.adversary = AdversarySpec::parse("forge:1");
  Simulation sim(c);
  const auto log = sim.run_round(0);
  CHECK(log.accepted == 3);
  CHECK(log.rejected_for(RejectReason::kKeyMismatch) == 1);
}

TEST_CASE("server attack against a fixed server compromises every round") {
  auto c = small_config(4);
  c.policy = topology::PolicyKind::kFixed;
  c.fixed_server = "d2";
  c.adversary = AdversarySpec::parse("server_attack:fixed:d2");
  Simulation sim(c);
  const auto before = params_digest(sim.global_params(), "mock");
  const auto log = sim.run_round(0);
  CHECK(log.server_id == "d2");
  CHECK(log.server_compromised);
  CHECK(log.degenerate);
  CHECK(log.global_digest == before);
}

TEST_CASE("rounds are deterministic under a seed") {
  Simulation a(small_config(4, 7));
  Simulation b(small_config(4, 7));
  Simulation other(small_config(4, 8));
  bool differs = false;
  for (std::uint64_t r = 0; r < 3; ++r) {
    const auto la = a.run_round(r);
    const auto lb = b.run_round(r);
    const auto lo = other.run_round(r);
    CHECK(la.global_digest == lb.global_digest);
    CHECK(la.server_id == lb.server_id);
    CHECK(la.test_loss == lb.test_loss);
    differs = differs || la.global_digest != lo.global_digest;
  }
  CHECK(differs);
}

TEST_CASE("round CSV rows match the header") {
  Simulation sim(small_config(3));
  const auto row = round_csv_row(sim.run_round(0));
  CHECK(std::count(row.begin(), row.end(), ',') + 1 == static_cast<long>(round_csv_columns().size()));
  CHECK(round_csv_header().rfind("round,server_id,", 0) == 0);
  CHECK(round_csv_columns().back() == "overhead_fraction");
}

TEST_CASE("AdversarySpec parsing") {
  CHECK(AdversarySpec::parse("none").mode == AttackMode::kNone);
  const auto t = AdversarySpec::parse("tamper:3");
  CHECK(t.mode == AttackMode::kTamper);
  CHECK(t.k == 3);
  CHECK(AdversarySpec::parse(t.to_string()).k == 3);
  const auto s = AdversarySpec::parse("server_attack:fixed:d1");
  CHECK(s.strategy.kind == topology::AdversaryKind::kGuessFixed);
  CHECK(s.strategy.target == "d1");
  CHECK(AdversarySpec::parse(s.to_string()).strategy.target == "d1");
  for (const char* bad : {"", "tamper", "tamper:x", "forge:-1", "server_attack:bogus", "none:1", "zap:1"}) {
    CHECK_THROWS_AS(AdversarySpec::parse(bad), DomainError);
  }
}

TEST_CASE("config validation and JSON") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_devices = 1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = ExperimentConfig{};
  c.m = 11;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = ExperimentConfig{};
  c.adversary = AdversarySpec::parse("tamper:11");
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = ExperimentConfig{};
  c.scheme_id = "rsa";
  CHECK_THROWS_AS(c.validate(), RegistryError);

  ExperimentConfig d = small_config(6);
  d.adversary = AdversarySpec::parse("forge:2");
  d.policy = topology::PolicyKind::kReputationWeighted;
  const nlohmann::json j = d;
  const auto back = j.get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.adversary.k == 2);

  const auto dir = scratch("cfg");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "c.jsonc");
    out << "{\n  // comment\n  \"n_devices\": 3, /* block */ \"scheme\": \"mock\", \"sgd\": {\"eta0\": 0.25}\n}\n";
  }
  const auto loaded = load_config(dir / "c.jsonc");
  CHECK(loaded.n_devices == 3);
  CHECK(loaded.scheme_id == "mock");
  CHECK(loaded.eta0 == 0.25);
  CHECK(loaded.rounds == 100);
  {
    std::ofstream out(dir / "bad.json");
    out << "{\"n_devices\": 0}";
  }
  // Loading is lenient so command-line overrides can still fix a value; validation happens later.
  CHECK_THROWS_AS(load_config(dir / "bad.json").validate(), DomainError);
  {
    std::ofstream out(dir / "typed.json");
    out << "{\"n_devices\": \"ten\"}";
  }
  CHECK_THROWS_AS(load_config(dir / "typed.json"), DomainError);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"n_devices\": ";
  }
  CHECK_THROWS_AS(load_config(dir / "broken.json"), DomainError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment writes rounds.csv and report.json") {
  auto c = small_config(3);
  c.rounds = 1;
  c.out_dir = scratch("run").string();
  std::ostringstream log;
  const auto report = run_experiment(c, &log);
  CHECK(report.rounds.size() == 1);
  CHECK_FALSE(report.convergence.has_value());
  CHECK(count_lines(report.out_dir / "rounds.csv") == 2);
  std::ifstream in(report.out_dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("rounds").size() == 1);
  CHECK(j.contains("overhead_fraction"));
  std::filesystem::remove_all(report.out_dir);
}

TEST_CASE("PQFL_OUT overrides the output directory") {
  auto c = small_config(3);
  c.rounds = 1;
  c.out_dir = scratch("ignored").string();
  const auto target = scratch("env");
  ::setenv("PQFL_OUT", target.c_str(), 1);
  const auto report = run_experiment(c);
  ::unsetenv("PQFL_OUT");
  CHECK(report.out_dir == target);
  CHECK(std::filesystem::exists(target / "rounds.csv"));
  CHECK_FALSE(std::filesystem::exists(c.out_dir));
  std::filesystem::remove_all(target);
}

TEST_CASE("unwritable output directory is an error") {
  const auto blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  auto c = small_config(3);
  c.rounds = 1;
  c.out_dir = (blocker / "sub").string();
  CHECK_THROWS_AS(run_experiment(c), Error);
  std::filesystem::remove(blocker);
}

TEST_CASE("convergence is reported for long runs") {
  auto c = small_config(3);
  c.rounds = 64;
  c.convergence = true;
  c.out_dir = scratch("conv").string();
  const auto report = run_experiment(c);
  REQUIRE(report.convergence.has_value());
  CHECK(std::isfinite(report.convergence->fitted_exponent));
  CHECK(report.convergence->loss_trace.size() == 64);
  std::filesystem::remove_all(report.out_dir);
}

TEST_CASE("the shipped example config loads and validates") {
  const auto c = load_config(PQFL_EXAMPLE_CONFIG);
  CHECK_NOTHROW(c.validate());
  CHECK(c.scheme_id == "dilithium2");
  CHECK(c.n_devices == 10);
}
