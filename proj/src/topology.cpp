#include "pqfl/topology.hpp"

#include <algorithm>
#include <cmath>

#include "pqfl/bytes.hpp"
#include "pqfl/error.hpp"

namespace pqfl::topology {
namespace {

// Stream tags keep the server draw and the adversary draw independent even
// when both are given the same seed.
constexpr std::uint64_t kSelectStream = 0x73656c6563740001ULL;
constexpr std::uint64_t kAdversaryStream = 0x6164766572730002ULL;

constexpr double kRejectFactor = 0.5;
constexpr double kScoreFloor = 0.01;

std::size_t uniform_index(std::uint64_t h, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * n) >> 64);
}

double unit_interval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::kFixed: return "fixed";
    case PolicyKind::kUniformRandom: return "uniform";
    case PolicyKind::kReputationWeighted: return "reputation";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "fixed") return PolicyKind::kFixed;
  if (name == "uniform") return PolicyKind::kUniformRandom;
  if (name == "reputation") return PolicyKind::kReputationWeighted;
  throw DomainError("unknown selection policy '" + std::string(name) + "'");
}

std::string_view to_string(AdversaryKind kind) noexcept {
  switch (kind) {
    case AdversaryKind::kGuessFixed: return "fixed";
    case AdversaryKind::kGuessUniform: return "uniform";
    case AdversaryKind::kGuessLastServer: return "last";
  }
  return "unknown";
}

AdversaryKind parse_adversary_kind(std::string_view name) {
  if (name == "fixed") return AdversaryKind::kGuessFixed;
  if (name == "uniform") return AdversaryKind::kGuessUniform;
  if (name == "last") return AdversaryKind::kGuessLastServer;
  throw DomainError("unknown adversary strategy '" + std::string(name) + "'");
}

ReputationTable::ReputationTable(std::span<const std::string> devices) {
  for (const auto& d : devices) scores_.emplace(d, 1.0);
}

double ReputationTable::score(std::string_view device_id) const {
  auto it = scores_.find(device_id);
  if (it == scores_.end()) throw DomainError("reputation: unknown device '" + std::string(device_id) + "'");
  return it->second;
}

bool ReputationTable::contains(std::string_view device_id) const {
  return scores_.find(device_id) != scores_.end();
}

void ReputationTable::set(std::string_view device_id, double score) {
  auto it = scores_.find(device_id);
  if (it == scores_.end()) throw DomainError("reputation: unknown device '" + std::string(device_id) + "'");
  if (!(score >= 0.0) || !std::isfinite(score)) throw DomainError("reputation: invalid score");
  const double old = it->second;
  it->second = score;
  if (std::none_of(scores_.begin(), scores_.end(), [](const auto& kv) { return kv.second > 0.0; })) {
    it->second = old;
    throw DomainError("reputation: at least one score must stay positive");
  }
}

std::string select_server(std::uint64_t round, std::span<const std::string> devices,
                          const SelectionPolicy& policy, const ReputationTable* reputation) {
  if (devices.empty()) throw DomainError("select_server: empty device list");
  const std::uint64_t h = derive_seed(policy.seed, kSelectStream, round);
  switch (policy.kind) {
    case PolicyKind::kFixed:
      if (std::find(devices.begin(), devices.end(), policy.fixed_device) == devices.end()) {
        throw DomainError("select_server: fixed device '" + policy.fixed_device + "' not in device list");
      }
      return policy.fixed_device;
    case PolicyKind::kUniformRandom:
      return devices[uniform_index(h, devices.size())];
    case PolicyKind::kReputationWeighted: {
      if (reputation == nullptr) throw DomainError("select_server: reputation policy needs a table");
      double total = 0.0;
      for (const auto& d : devices) total += reputation->score(d);
      if (!(total > 0.0)) throw DomainError("select_server: all reputation scores are zero");
      double u = unit_interval(h) * total;
      for (const auto& d : devices) {
        const double s = reputation->score(d);
        if (u < s) return d;
        u -= s;
      }
      // Rounding can leave u just above the last weight.
      for (auto it = devices.rbegin(); it != devices.rend(); ++it) {
        if (reputation->score(*it) > 0.0) return *it;
      }
      return devices.back();
    }
  }
  throw DomainError("select_server: unknown policy");
}

ReputationTable update_reputation(const ReputationTable& table, const FilterReport& report) {
  ReputationTable next = table;
  for (const auto& id : report.accepted) next.set(id, next.score(id) + 1.0);
  for (const auto& [id, reason] : report.rejected) {
    next.set(id, std::max(next.score(id) * kRejectFactor, kScoreFloor));
  }
  return next;
}

std::string adversary_target(const AdversaryStrategy& adversary, std::uint64_t round,
                             std::span<const std::string> devices, std::string_view previous_server) {
  if (devices.empty()) throw DomainError("adversary_target: empty device list");
  switch (adversary.kind) {
    case AdversaryKind::kGuessFixed:
      if (std::find(devices.begin(), devices.end(), adversary.target) == devices.end()) {
        throw DomainError("adversary_target: unknown target '" + adversary.target + "'");
      }
      return adversary.target;
    case AdversaryKind::kGuessUniform:
      return devices[uniform_index(derive_seed(adversary.seed, kAdversaryStream, round), devices.size())];
    case AdversaryKind::kGuessLastServer:
      return previous_server.empty() ? devices.front() : std::string(previous_server);
  }
  throw DomainError("adversary_target: unknown strategy");
}

std::vector<std::string> device_names(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back("d" + std::to_string(i));
  return out;
}

AttackOutcome simulate_attack(const SelectionPolicy& policy, std::size_t n_devices,
                              const AdversaryStrategy& adversary, std::size_t trials) {
  if (n_devices == 0) throw DomainError("simulate_attack: need at least one device");
  if (trials == 0) throw DomainError("simulate_attack: trials must be >= 1");
  const auto devices = device_names(n_devices);
  const ReputationTable reputation(devices);

  AttackOutcome out;
  out.policy = std::string(to_string(policy.kind));
  out.adversary = std::string(to_string(adversary.kind));
  out.n_devices = n_devices;
  out.trials = trials;

  std::string previous;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::string target = adversary_target(adversary, t, devices, previous);
    const std::string server = select_server(t, devices, policy, &reputation);
    if (target == server) ++out.hits;
    previous = server;
  }
  out.hit_rate = static_cast<double>(out.hits) / static_cast<double>(trials);
  return out;
}

void to_json(nlohmann::json& j, const AttackOutcome& o) {
  j = nlohmann::json{{"policy", o.policy}, {"adversary", o.adversary}, {"n", o.n_devices},
                     {"trials", o.trials}, {"hits", o.hits},           {"hit_rate", o.hit_rate}};
}

}  // namespace pqfl::topology
