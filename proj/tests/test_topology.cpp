#include <cmath>
#include <map>

#include "doctest.h"
#include "pqfl/error.hpp"
#include "pqfl/topology.hpp"

using namespace pqfl;
using namespace pqfl::topology;

TEST_CASE("device_names") {
  CHECK(device_names(3) == std::vector<std::string>{"d0", "d1", "d2"});
  CHECK(device_names(0).empty());
}

TEST_CASE("fixed selection always returns the configured device") {
  const auto devices = device_names(5);
  for (std::uint64_t r = 0; r < 50; ++r) CHECK(select_server(r, devices, SelectionPolicy::fixed("d3")) == "d3");
  CHECK_THROWS_AS(select_server(0, devices, SelectionPolicy::fixed("d9")), DomainError);
}

TEST_CASE("selection with a single device") {
  const auto one = device_names(1);
  CHECK(select_server(7, one, SelectionPolicy::uniform(3)) == "d0");
  ReputationTable rep(one);
  CHECK(select_server(7, one, SelectionPolicy::reputation(3), &rep) == "d0");
}

TEST_CASE("empty device list") {
  CHECK_THROWS_AS(select_server(0, std::vector<std::string>{}, SelectionPolicy::uniform(1)), DomainError);
}

TEST_CASE("uniform selection frequencies") {
  const auto devices = device_names(10);
  std::map<std::string, int> counts;
  for (std::uint64_t r = 0; r < 10000; ++r) ++counts[select_server(r, devices, SelectionPolicy::uniform(42))];
  CHECK(counts.size() == 10);
  for (const auto& [id, c] : counts) {
    CHECK(c / 10000.0 >= 0.07);
    CHECK(c / 10000.0 <= 0.13);
  }
}

TEST_CASE("selection is reproducible and seed dependent") {
  const auto devices = device_names(8);
  std::vector<std::string> a, b, c;
  for (std::uint64_t r = 0; r < 200; ++r) {
    a.push_back(select_server(r, devices, SelectionPolicy::uniform(5)));
    b.push_back(select_server(r, devices, SelectionPolicy::uniform(5)));
    c.push_back(select_server(r, devices, SelectionPolicy::uniform(6)));
  }
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("reputation-weighted selection follows the scores") {
  const auto devices = device_names(3);
  ReputationTable rep(devices);
  rep.set("d0", 0.0);
  rep.set("d1", 1.0);
  rep.set("d2", 3.0);
  std::map<std::string, int> counts;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    ++counts[select_server(r, devices, SelectionPolicy::reputation(1), &rep)];
  }
  CHECK(counts["d0"] == 0);
  CHECK(counts["d1"] / 20000.0 == doctest::Approx(0.25).epsilon(0.08));
  CHECK(counts["d2"] / 20000.0 == doctest::Approx(0.75).epsilon(0.03));
  CHECK_THROWS_AS(select_server(0, devices, SelectionPolicy::reputation(1)), DomainError);
  ReputationTable partial(device_names(2));
  CHECK_THROWS_AS(select_server(0, devices, SelectionPolicy::reputation(1), &partial), DomainError);
}

TEST_CASE("reputation table") {
  ReputationTable rep(device_names(2));
  CHECK(rep.score("d0") == 1.0);
  CHECK_THROWS_AS(rep.score("zz"), DomainError);
  CHECK_THROWS_AS(rep.set("zz", 1.0), DomainError);
  CHECK_THROWS_AS(rep.set("d0", -1.0), DomainError);
  CHECK_THROWS_AS(rep.set("d0", NAN), DomainError);
  rep.set("d0", 0.0);
  CHECK_THROWS_AS(rep.set("d1", 0.0), DomainError);  // all-zero table
}

TEST_CASE("update_reputation") {
  ReputationTable rep(device_names(3));
  FilterReport report;
  report.accepted = {"d0"};
  report.rejected = {{"d1", RejectReason::kBadSignature}, {"d2", RejectReason::kStaleRound}};
  auto next = update_reputation(rep, report);
  CHECK(next.score("d0") == 2.0);
  CHECK(next.score("d1") == 0.5);
  next = update_reputation(next, report);
  CHECK(next.score("d1") == 0.25);
  for (int i = 0; i < 20; ++i) next = update_reputation(next, report);
  CHECK(next.score("d2") == 0.01);
  CHECK(rep.score("d0") == 1.0);  // input untouched

  FilterReport unknown;
  unknown.accepted = {"dx"};
  CHECK_THROWS_AS(update_reputation(rep, unknown), DomainError);
}

TEST_CASE("parse names") {
  CHECK(parse_policy_kind("fixed") == PolicyKind::kFixed);
  CHECK(parse_policy_kind("uniform") == PolicyKind::kUniformRandom);
  CHECK(parse_policy_kind("reputation") == PolicyKind::kReputationWeighted);
  CHECK_THROWS_AS(parse_policy_kind("random"), DomainError);
  CHECK(parse_adversary_kind("last") == AdversaryKind::kGuessLastServer);
  CHECK_THROWS_AS(parse_adversary_kind(""), DomainError);
  CHECK(parse_policy_kind(to_string(PolicyKind::kReputationWeighted)) == PolicyKind::kReputationWeighted);
  CHECK(parse_adversary_kind(to_string(AdversaryKind::kGuessFixed)) == AdversaryKind::kGuessFixed);
}

TEST_CASE("adversary_target") {
  const auto devices = device_names(4);
  CHECK(adversary_target(AdversaryStrategy::guess_fixed("d2"), 5, devices, "d1") == "d2");
  CHECK(adversary_target(AdversaryStrategy::guess_last_server(), 0, devices, "") == "d0");
  CHECK(adversary_target(AdversaryStrategy::guess_last_server(), 3, devices, "d3") == "d3");
  CHECK_THROWS_AS(adversary_target(AdversaryStrategy::guess_fixed("d7"), 0, devices, ""), DomainError);
}

TEST_CASE("simulate_attack examples") {
  const auto fixed = simulate_attack(SelectionPolicy::fixed("d0"), 10, AdversaryStrategy::guess_fixed("d0"), 10000);
  CHECK(fixed.hit_rate == 1.0);
  CHECK(fixed.hits == 10000);

  const auto uniform =
      simulate_attack(SelectionPolicy::uniform(42), 10, AdversaryStrategy::guess_fixed("d0"), 10000);
  CHECK(uniform.hit_rate >= 0.088);
  CHECK(uniform.hit_rate <= 0.112);

  const auto last = simulate_attack(SelectionPolicy::fixed("d4"), 10, AdversaryStrategy::guess_last_server(), 100);
  CHECK(last.hits == 99);  // every round after the first

  CHECK_THROWS_AS(simulate_attack(SelectionPolicy::uniform(1), 0, AdversaryStrategy::guess_uniform(1), 10),
                  DomainError);
  CHECK_THROWS_AS(simulate_attack(SelectionPolicy::uniform(1), 3, AdversaryStrategy::guess_uniform(1), 0),
                  DomainError);
}

TEST_CASE("randomized selection bounds any committed adversary near 1/n") {
  for (std::size_t n : {2u, 5u, 10u, 25u}) {
    for (const auto& adversary : {AdversaryStrategy::guess_fixed("d1"), AdversaryStrategy::guess_uniform(9),
                                  AdversaryStrategy::guess_last_server()}) {
      const auto out = simulate_attack(SelectionPolicy::uniform(17), n, adversary, 20000);
      const double p = 1.0 / static_cast<double>(n);
      const double sigma = std::sqrt(p * (1 - p) / 20000.0);
      CHECK(std::abs(out.hit_rate - p) <= 4 * sigma);
      const auto deterministic = simulate_attack(SelectionPolicy::fixed("d1"), n, adversary, 20000);
      if (adversary.kind == AdversaryKind::kGuessFixed) CHECK(deterministic.hit_rate > out.hit_rate);
    }
  }
}

TEST_CASE("AttackOutcome JSON") {
  const auto out = simulate_attack(SelectionPolicy::fixed("d0"), 3, AdversaryStrategy::guess_fixed("d0"), 5);
  const nlohmann::json j = out;
  CHECK(j.at("policy") == "fixed");
  CHECK(j.at("adversary") == "fixed");
  CHECK(j.at("n") == 3);
  CHECK(j.at("trials") == 5);
  CHECK(j.at("hits") == 5);
  CHECK(j.at("hit_rate") == 1.0);
}
