#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pqfl/envelope.hpp"
#include "pqfl/learning.hpp"
#include "pqfl/pqc.hpp"
#include "pqfl/topology.hpp"

namespace pqfl {

struct DatasetSource {
  enum class Kind { kSynthetic, kIdx };
  Kind kind = Kind::kSynthetic;
  // synthetic
  std::size_t n_samples = 2000;
  int classes = 10;
  std::size_t dim = 3;
  double separation = 4.0;
  double train_fraction = 0.8;
  // idx; without test files the train files are split by train_fraction
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};

enum class AttackMode { kNone, kTamper, kForge, kServerAttack };

/// What the in-transit adversary does each round.
///  tamper(k): flips one mantissa bit of a param in k envelopes after signing.
///  forge(k):  replaces k devices' params with poisoned values signed under the
///             attacker's own key.
///  server_attack: commits to a target before selection; a hit compromises the
///             round's server and the round's aggregate is discarded.
struct AdversarySpec {
  AttackMode mode = AttackMode::kNone;
  std::size_t k = 0;
  topology::AdversaryStrategy strategy = topology::AdversaryStrategy::guess_uniform(0);

  /// "none", "tamper:K", "forge:K", "server_attack:STRATEGY[:TARGET]".
  static AdversarySpec parse(std::string_view text);
  std::string to_string() const;
};

struct ExperimentConfig {
  std::size_t n_devices = 10;
  std::size_t rounds = 100;
  std::string scheme_id = "dilithium2";
  topology::PolicyKind policy = topology::PolicyKind::kUniformRandom;
  std::string fixed_server = "d0";
  DatasetSource dataset;
  int m = 0;  // classes per client; 0 means all classes
  double eta0 = 0.5;
  learning::StepSchedule schedule = learning::StepSchedule::kInvSqrt;
  std::size_t batch_size = 16;
  std::size_t local_epochs = 1;
  double rho = 1e-3;
  AdversarySpec adversary;
  std::uint64_t seed = 42;
  std::string out_dir = "pqfl_out";
  double bandwidth_bytes_per_sec = 1.25e6;  // 10 Mbit/s
  bool convergence = true;
  bool benchmark = false;
  std::size_t bench_trials = 30;
  std::size_t bench_message_len = 8192;
  bool attack_sim = false;
  std::size_t attack_trials = 10000;

  /// Throws DomainError describing the first violated invariant.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Missing keys keep their defaults. Throws DomainError on invalid values.
void from_json(const nlohmann::json& j, ExperimentConfig& c);
/// Reads JSON with // and /* */ comments allowed.
ExperimentConfig load_config(const std::filesystem::path& path);

struct RoundLog {
  std::uint64_t round = 0;
  std::string server_id;
  std::size_t envelopes = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<RejectReason, std::size_t> reasons;
  bool degenerate = false;          // global params retained
  bool server_compromised = false;  // server_attack hit
  std::size_t wire_bytes = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  std::string global_digest;  // SHA-256 of the canonical encoding of the global params
  // Wall times (transfer is simulated from wire_bytes and the bandwidth).
  std::int64_t train_ns = 0;
  std::int64_t sign_ns = 0;
  std::int64_t transfer_ns = 0;
  std::int64_t verify_ns = 0;
  std::int64_t aggregate_ns = 0;
  std::int64_t round_ns = 0;
  double overhead_fraction = 0.0;  // (sign + verify) / round

  std::size_t rejected_for(RejectReason r) const;
};

/// Column names of rounds.csv, in order. The trailing seven are wall-time columns.
const std::vector<std::string>& round_csv_columns();
inline constexpr std::size_t kRoundCsvTimeColumns = 7;
std::string round_csv_header();
std::string round_csv_row(const RoundLog& log);

void to_json(nlohmann::json& j, const RoundLog& log);

/// Digest of params under the fixed header (round 0, device "global").
std::string params_digest(const ParamVector& params, std::string_view scheme_id);

/// Loaded data, partition and per-device keys for one experiment, plus the
/// mutable round state (global params, reputation, previous server).
class Simulation {
 public:
  /// Throws DomainError for an invalid config and ParseError for unreadable data.
  explicit Simulation(ExperimentConfig config);

  /// Executes one round of the protocol and replaces the global params unless
  /// every update was rejected or the server was compromised.
  RoundLog run_round(std::uint64_t round);

  const ExperimentConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& devices() const noexcept { return devices_; }
  const ParamVector& global_params() const noexcept { return global_; }
  const learning::Dataset& dataset() const noexcept { return *train_data_; }
  const learning::DatasetView& train_split() const noexcept { return *train_; }
  const learning::DatasetView& test_split() const noexcept { return *test_; }
  const learning::PartitionSpec& partition() const noexcept { return partition_; }
  const learning::SoftmaxModel& model() const noexcept { return model_; }
  const topology::ReputationTable& reputation() const noexcept { return reputation_; }
  const KeyDirectory& key_directory() const noexcept { return directory_; }
  /// Global train loss recorded after every round so far.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }
  double max_gradient_norm() const noexcept { return max_gradient_norm_; }

  /// The envelopes the devices sent in the most recent round, after the
  /// adversary acted on them.
  const std::vector<UpdateEnvelope>& last_envelopes() const noexcept { return last_envelopes_; }

 private:
  std::vector<UpdateEnvelope> attack_in_transit(std::vector<UpdateEnvelope> envelopes,
                                                std::uint64_t round);

  ExperimentConfig config_;
  std::vector<std::string> devices_;
  std::unique_ptr<learning::Dataset> train_data_;
  std::unique_ptr<learning::Dataset> test_data_;  // null when split from train_data_
  std::optional<learning::DatasetView> train_;
  std::optional<learning::DatasetView> test_;
  learning::PartitionSpec partition_;
  learning::SoftmaxModel model_;
  std::vector<pqc::KeyPair> keys_;
  std::optional<pqc::KeyPair> attacker_keys_;
  KeyDirectory directory_;
  topology::SelectionPolicy policy_;

  ParamVector global_;
  topology::ReputationTable reputation_;
  std::string previous_server_;
  std::vector<double> loss_history_;
  double max_gradient_norm_ = 0.0;
  std::vector<UpdateEnvelope> last_envelopes_;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RoundLog> rounds;
  std::optional<learning::ConvergenceReport> convergence;
  std::string convergence_note;  // why convergence is absent, if it is
  std::vector<pqc::TimingReport> timings;
  std::optional<topology::AttackOutcome> attack;
  std::filesystem::path out_dir;
};

void to_json(nlohmann::json& j, const ExperimentReport& r);

/// Runs all rounds, writing rounds.csv as it goes, then report.json (and
/// bench.csv when benchmarking). PQFL_OUT overrides config.out_dir. Progress
/// and the exit summary go to `log` when non-null.
ExperimentReport run_experiment(ExperimentConfig config, std::ostream* log = nullptr);

}  // namespace pqfl
