#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pqfl/envelope.hpp"

namespace pqfl::topology {

enum class PolicyKind { kFixed, kUniformRandom, kReputationWeighted };

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::kUniformRandom;
  std::string fixed_device;  // kFixed only
  std::uint64_t seed = 0;

  static SelectionPolicy fixed(std::string device_id) {
    return {PolicyKind::kFixed, std::move(device_id), 0};
  }
  static SelectionPolicy uniform(std::uint64_t seed) { return {PolicyKind::kUniformRandom, {}, seed}; }
  static SelectionPolicy reputation(std::uint64_t seed) {
    return {PolicyKind::kReputationWeighted, {}, seed};
  }
};

std::string_view to_string(PolicyKind kind) noexcept;
/// "fixed", "uniform", "reputation". Throws DomainError otherwise.
PolicyKind parse_policy_kind(std::string_view name);

/// Per-device nonnegative score, 1.0 on creation. At least one score stays positive.
class ReputationTable {
 public:
  ReputationTable() = default;
  explicit ReputationTable(std::span<const std::string> devices);

  double score(std::string_view device_id) const;  // DomainError if unknown
  bool contains(std::string_view device_id) const;
  void set(std::string_view device_id, double score);  // DomainError if unknown or invalid
  const std::map<std::string, double, std::less<>>& scores() const noexcept { return scores_; }

 private:
  std::map<std::string, double, std::less<>> scores_;
};

/// Picks the round's server. Draws are counter-based on (policy.seed, round),
/// so they do not depend on other consumers of randomness. kReputationWeighted
/// requires `reputation` and covers every device. Throws DomainError on an
/// empty device list or a fixed device not in the list.
std::string select_server(std::uint64_t round, std::span<const std::string> devices,
                          const SelectionPolicy& policy, const ReputationTable* reputation = nullptr);

/// Accepted devices gain +1; rejected devices are halved, floored at 0.01.
/// Throws DomainError if the report names a device the table does not hold.
ReputationTable update_reputation(const ReputationTable& table, const FilterReport& report);

enum class AdversaryKind { kGuessFixed, kGuessUniform, kGuessLastServer };

struct AdversaryStrategy {
  AdversaryKind kind = AdversaryKind::kGuessUniform;
  std::string target;  // kGuessFixed only
  std::uint64_t seed = 0;

  static AdversaryStrategy guess_fixed(std::string target) {
    return {AdversaryKind::kGuessFixed, std::move(target), 0};
  }
  static AdversaryStrategy guess_uniform(std::uint64_t seed) {
    return {AdversaryKind::kGuessUniform, {}, seed};
  }
  static AdversaryStrategy guess_last_server() { return {AdversaryKind::kGuessLastServer, {}, 0}; }
};

std::string_view to_string(AdversaryKind kind) noexcept;
/// "fixed", "uniform", "last". Throws DomainError otherwise.
AdversaryKind parse_adversary_kind(std::string_view name);

/// Adversary's committed target for `round`, chosen before the selection is
/// revealed. `previous_server` is empty in round 0.
std::string adversary_target(const AdversaryStrategy& adversary, std::uint64_t round,
                             std::span<const std::string> devices, std::string_view previous_server);

struct AttackOutcome {
  std::string policy;
  std::string adversary;
  std::size_t n_devices = 0;
  std::size_t trials = 0;
  std::size_t hits = 0;
  double hit_rate = 0.0;
};

/// Device names used by the simulator and the orchestrator: d0, d1, ...
std::vector<std::string> device_names(std::size_t n);

/// One selection per trial (trial index = round); the adversary commits first
/// and scores a hit when its target is the selected server. Throws
/// DomainError for n_devices == 0 or trials == 0.
AttackOutcome simulate_attack(const SelectionPolicy& policy, std::size_t n_devices,
                              const AdversaryStrategy& adversary, std::size_t trials);

void to_json(nlohmann::json& j, const AttackOutcome& outcome);

}  // namespace pqfl::topology
