#include "pqfl/orchestrator.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "pqfl/error.hpp"

namespace pqfl {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kDeviceKeyStream = 0x6b657973;
constexpr std::uint64_t kTrainStream = 0x747261696e;
constexpr std::uint64_t kTamperStream = 0x74616d706572;
constexpr std::uint64_t kForgeStream = 0x666f726765;
constexpr std::uint64_t kAttackerKeyStream = 0x61747461636b;
constexpr std::uint64_t kSplitStream = 0x73706c6974;
constexpr std::uint64_t kDataStream = 0x64617461;
constexpr std::uint64_t kPolicyStream = 0x706f6c696379;
constexpr std::uint64_t kSmoothnessStream = 0x736d6f6f7468;

constexpr double kForgeScale = -10.0;

std::int64_t since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// k distinct device indices, drawn reproducibly for (seed, stream, round).
std::vector<std::size_t> pick_devices(std::size_t n, std::size_t k, std::uint64_t seed,
                                      std::uint64_t stream, std::uint64_t round) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, stream, round));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::size_t RoundLog::rejected_for(RejectReason r) const {
  auto it = reasons.find(r);
  return it == reasons.end() ? 0 : it->second;
}

const std::vector<std::string>& round_csv_columns() {
  static const std::vector<std::string> kColumns = {
      "round",          "server_id",         "envelopes",        "accepted",
      "rejected",       "rej_bad_signature", "rej_malformed",    "rej_unknown_scheme",
      "rej_stale_round", "rej_duplicate",    "rej_key_mismatch", "degenerate",
      "server_compromised", "wire_bytes",    "train_loss",       "train_accuracy",
      "test_loss",      "test_accuracy",     "global_digest",    "train_ns",
      "sign_ns",        "transfer_ns",       "verify_ns",        "aggregate_ns",
      "round_ns",       "overhead_fraction",
  };
  return kColumns;
}

std::string round_csv_header() {
  std::string out;
  for (const auto& c : round_csv_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string round_csv_row(const RoundLog& r) {
  std::ostringstream os;
  os << r.round << ',' << r.server_id << ',' << r.envelopes << ',' << r.accepted << ','
     << r.rejected << ',' << r.rejected_for(RejectReason::kBadSignature) << ','
     << r.rejected_for(RejectReason::kMalformed) << ','
     << r.rejected_for(RejectReason::kUnknownScheme) << ','
     << r.rejected_for(RejectReason::kStaleRound) << ','
     << r.rejected_for(RejectReason::kDuplicate) << ','
     << r.rejected_for(RejectReason::kKeyMismatch) << ',' << (r.degenerate ? 1 : 0) << ','
     << (r.server_compromised ? 1 : 0) << ',' << r.wire_bytes << ',' << fmt_double(r.train_loss)
     << ',' << fmt_double(r.train_accuracy) << ',' << fmt_double(r.test_loss) << ','
     << fmt_double(r.test_accuracy) << ',' << r.global_digest << ',' << r.train_ns << ','
     << r.sign_ns << ',' << r.transfer_ns << ',' << r.verify_ns << ',' << r.aggregate_ns << ','
     << r.round_ns << ',' << fmt_double(r.overhead_fraction);
  return os.str();
}

void to_json(nlohmann::json& j, const RoundLog& r) {
  nlohmann::json reasons = nlohmann::json::object();
  for (const auto& [reason, count] : r.reasons) reasons[std::string(to_string(reason))] = count;
  j = nlohmann::json{{"round", r.round},
                     {"server_id", r.server_id},
                     {"envelopes", r.envelopes},
                     {"accepted", r.accepted},
                     {"rejected", r.rejected},
                     {"reasons", reasons},
                     {"degenerate", r.degenerate},
                     {"server_compromised", r.server_compromised},
                     {"wire_bytes", r.wire_bytes},
                     {"train_loss", r.train_loss},
                     {"train_accuracy", r.train_accuracy},
                     {"test_loss", r.test_loss},
                     {"test_accuracy", r.test_accuracy},
                     {"global_digest", r.global_digest},
                     {"timings_ns",
                      {{"train", r.train_ns},
                       {"sign", r.sign_ns},
                       {"transfer", r.transfer_ns},
                       {"verify", r.verify_ns},
                       {"aggregate", r.aggregate_ns},
                       {"round", r.round_ns}}},
                     {"overhead_fraction", r.overhead_fraction}};
}

std::string params_digest(const ParamVector& params, std::string_view scheme_id) {
  return to_hex(sha256(canonical_encode(0, "global", scheme_id, params)));
}

Simulation::Simulation(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  devices_ = topology::device_names(config_.n_devices);

  const auto& src = config_.dataset;
  if (src.kind == DatasetSource::Kind::kSynthetic) {
    train_data_ = std::make_unique<learning::Dataset>(learning::make_synthetic(
        derive_seed(config_.seed, kDataStream), src.n_samples, src.classes, src.dim, src.separation));
  } else {
    train_data_ = std::make_unique<learning::Dataset>(learning::load_idx(src.train_images, src.train_labels));
    if (!src.test_images.empty()) {
      test_data_ = std::make_unique<learning::Dataset>(learning::load_idx(src.test_images, src.test_labels));
      if (test_data_->dim() != train_data_->dim() || test_data_->n_classes() != train_data_->n_classes()) {
        throw DomainError("config: test set shape differs from the train set");
      }
    }
  }
  if (test_data_) {
    train_.emplace(*train_data_);
    test_.emplace(*test_data_);
  } else {
    auto [train, test] = learning::train_test_split(*train_data_, src.train_fraction,
                                                    derive_seed(config_.seed, kSplitStream));
    train_.emplace(std::move(train));
    test_.emplace(std::move(test));
  }

  const int classes = train_data_->n_classes();
  if (config_.m > classes) throw DomainError("config: m exceeds the class count");
  partition_ = learning::cycle_m_partition(*train_, config_.n_devices, config_.m == 0 ? classes : config_.m);
  model_ = learning::SoftmaxModel::for_dataset(*train_data_, config_.rho);

  const bool seeded = !pqc::require_scheme(config_.scheme_id).post_quantum;
  for (std::size_t i = 0; i < config_.n_devices; ++i) {
    auto keys = seeded ? pqc::keygen(config_.scheme_id, derive_seed(config_.seed, kDeviceKeyStream, i))
                       : pqc::keygen(config_.scheme_id);
    directory_.emplace(devices_[i], keys.public_key());
    keys_.push_back(std::move(keys));
  }
  if (config_.adversary.mode == AttackMode::kForge) {
    attacker_keys_.emplace(seeded ? pqc::keygen(config_.scheme_id, derive_seed(config_.seed, kAttackerKeyStream))
                                  : pqc::keygen(config_.scheme_id));
  }

  policy_.kind = config_.policy;
  policy_.fixed_device = config_.fixed_server;
  policy_.seed = derive_seed(config_.seed, kPolicyStream);
  if (config_.adversary.mode == AttackMode::kServerAttack &&
      config_.adversary.strategy.kind == topology::AdversaryKind::kGuessUniform) {
    config_.adversary.strategy.seed = derive_seed(config_.seed, kPolicyStream, 1);
  }

  global_ = ParamVector(std::vector<double>(model_.num_params(), 0.0));
  reputation_ = topology::ReputationTable(devices_);
}

std::vector<UpdateEnvelope> Simulation::attack_in_transit(std::vector<UpdateEnvelope> envelopes,
                                                          std::uint64_t round) {
  const auto& adv = config_.adversary;
  if (adv.mode == AttackMode::kTamper) {
    std::mt19937_64 rng(derive_seed(config_.seed, kTamperStream, ~round));
    for (std::size_t i : pick_devices(envelopes.size(), adv.k, config_.seed, kTamperStream, round)) {
      auto values = envelopes[i].params.values();
      if (values.empty()) continue;
      auto& v = values[rng() % values.size()];
      // Mantissa bits only: the value stays finite, so the envelope still
      // parses and only the signature check can catch it.
      v = std::bit_cast<double>(std::bit_cast<std::uint64_t>(v) ^ (std::uint64_t{1} << (rng() % 52)));
      envelopes[i].params = ParamVector(std::move(values));
    }
  } else if (adv.mode == AttackMode::kForge) {
    for (std::size_t i : pick_devices(envelopes.size(), adv.k, config_.seed, kForgeStream, round)) {
      auto values = envelopes[i].params.values();
      for (auto& v : values) v *= kForgeScale;
      envelopes[i] = sign_update(ParamVector(std::move(values)), round, envelopes[i].device_id, *attacker_keys_);
    }
  }
  return envelopes;
}

RoundLog Simulation::run_round(std::uint64_t round) {
  const auto round_start = Clock::now();
  RoundLog log;
  log.round = round;
  log.server_id = topology::select_server(round, devices_, policy_, &reputation_);

  if (config_.adversary.mode == AttackMode::kServerAttack) {
    const auto target = topology::adversary_target(config_.adversary.strategy, round, devices_, previous_server_);
    log.server_compromised = target == log.server_id;
  }

  // Device phase: local training from the current global params, then signing.
  std::vector<UpdateEnvelope> envelopes;
  envelopes.reserve(devices_.size());
  std::vector<ParamVector> local(devices_.size());
  auto t0 = Clock::now();
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const auto& shard_rows = partition_.assignment[i];
    if (shard_rows.empty()) {
      local[i] = global_;
      continue;
    }
    const learning::DatasetView shard(*train_data_, shard_rows);
    learning::SGDConfig sgd;
    const std::size_t steps_per_epoch = (shard.size() + config_.batch_size - 1) / config_.batch_size;
    sgd.steps = steps_per_epoch * config_.local_epochs;
    sgd.eta0 = config_.eta0;
    sgd.schedule = config_.schedule;
    sgd.batch_size = config_.batch_size;
    sgd.seed = derive_seed(config_.seed ^ i, kTrainStream, round);
    sgd.step_offset = static_cast<std::size_t>(round) * sgd.steps;
    sgd.record_trace = false;
    auto result = learning::local_sgd(global_, shard, model_, sgd);
    max_gradient_norm_ = std::max(max_gradient_norm_, result.max_gradient_norm);
    local[i] = std::move(result.params);
  }
  log.train_ns = since(t0);

  t0 = Clock::now();
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    envelopes.push_back(sign_update(local[i], round, devices_[i], keys_[i]));
  }
  log.sign_ns = since(t0);

  envelopes = attack_in_transit(std::move(envelopes), round);
  log.envelopes = envelopes.size();

  // Server phase: filter against the key directory, then aggregate.
  t0 = Clock::now();
  const FilterReport report = filter_updates(envelopes, round, &directory_);
  log.verify_ns = since(t0);
  log.accepted = report.accepted.size();
  log.rejected = report.rejected.size();
  for (const auto& [id, reason] : report.rejected) ++log.reasons[reason];

  t0 = Clock::now();
  if (log.server_compromised) {
    log.degenerate = true;
  } else {
    try {
      global_ = fed_avg(report.accepted_params);
    } catch (const AggregationError&) {
      log.degenerate = true;
    }
  }
  log.aggregate_ns = since(t0);

  reputation_ = topology::update_reputation(reputation_, report);
  previous_server_ = log.server_id;

  // Upload of every envelope plus the broadcast of the global params.
  const std::size_t global_bytes = canonical_encode(round, "global", config_.scheme_id, global_).size();
  log.wire_bytes = global_bytes * devices_.size();
  for (const auto& e : envelopes) {
    log.wire_bytes += signed_message(e).size() + e.public_key.size() + e.signature.size();
  }
  log.transfer_ns = static_cast<std::int64_t>(
      std::llround(static_cast<double>(log.wire_bytes) / config_.bandwidth_bytes_per_sec * 1e9));

  const auto train_eval = learning::evaluate(global_, *train_, model_);
  const auto test_eval = learning::evaluate(global_, *test_, model_);
  log.train_loss = train_eval.loss;
  log.train_accuracy = train_eval.accuracy;
  log.test_loss = test_eval.loss;
  log.test_accuracy = test_eval.accuracy;
  log.global_digest = params_digest(global_, config_.scheme_id);
  loss_history_.push_back(train_eval.loss);

  log.round_ns = since(round_start) + log.transfer_ns;
  log.overhead_fraction =
      log.round_ns > 0 ? static_cast<double>(log.sign_ns + log.verify_ns) / static_cast<double>(log.round_ns) : 0.0;
  last_envelopes_ = std::move(envelopes);
  return log;
}

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  j = nlohmann::json{{"config", r.config}, {"rounds", r.rounds}};
  if (r.convergence) {
    const auto& c = *r.convergence;
    j["convergence"] = {{"fitted_exponent", c.fitted_exponent},
                        {"optimum_estimate", c.optimum_estimate},
                        {"fit_begin", c.fit_begin},
                        {"gradient_bound_B", c.gradient_bound_B},
                        {"smoothness_estimate_L", c.smoothness_estimate_L},
                        {"loss_trace", c.loss_trace}};
  } else {
    j["convergence"] = nullptr;
    j["convergence_note"] = r.convergence_note;
  }
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& t : r.timings) {
    auto summary = [](const pqc::DurationSummary& s) {
      return nlohmann::json{{"min", s.min_ns}, {"median", s.median_ns}, {"p95", s.p95_ns}};
    };
    timings.push_back({{"scheme_id", t.scheme_id},
                       {"trials", t.trials},
                       {"message_len", t.message_len},
                       {"key_gen_ns", summary(t.key_gen)},
                       {"sign_ns", summary(t.sign)},
                       {"verify_ns", summary(t.verify)}});
  }
  j["timings"] = timings;
  j["attack"] = r.attack ? nlohmann::json(*r.attack) : nlohmann::json(nullptr);

  std::int64_t sign = 0, verify = 0, total = 0;
  for (const auto& log : r.rounds) {
    sign += log.sign_ns;
    verify += log.verify_ns;
    total += log.round_ns;
  }
  j["overhead_fraction"] = total > 0 ? static_cast<double>(sign + verify) / static_cast<double>(total) : 0.0;
}

ExperimentReport run_experiment(ExperimentConfig config, std::ostream* log) {
  if (const char* env = std::getenv("PQFL_OUT"); env != nullptr && *env != '\0') config.out_dir = env;

  ExperimentReport report;
  report.config = config;
  report.out_dir = config.out_dir;

  Simulation sim(config);

  std::error_code ec;
  std::filesystem::create_directories(report.out_dir, ec);
  if (ec) throw Error("cannot create output directory " + report.out_dir.string() + ": " + ec.message());

  std::ofstream rounds_csv(report.out_dir / "rounds.csv");
  if (!rounds_csv) throw Error("cannot write " + (report.out_dir / "rounds.csv").string());
  rounds_csv << round_csv_header() << '\n';

  for (std::uint64_t r = 0; r < config.rounds; ++r) {
    report.rounds.push_back(sim.run_round(r));
    rounds_csv << round_csv_row(report.rounds.back()) << '\n' << std::flush;
    if (!rounds_csv) throw Error("write failed: " + (report.out_dir / "rounds.csv").string());
    if (log != nullptr) {
      const auto& l = report.rounds.back();
      *log << "round " << l.round << " server=" << l.server_id << " accepted=" << l.accepted
           << " rejected=" << l.rejected << " test_acc=" << l.test_accuracy
           << (l.degenerate ? " (global retained)" : "") << '\n';
    }
  }

  if (!config.convergence) {
    report.convergence_note = "disabled";
  } else if (sim.loss_history().size() < 64) {
    report.convergence_note = "needs at least 64 rounds";
  } else {
    const learning::SoftmaxRegression objective(sim.train_split(), sim.model());
    const auto optimum = learning::minimize_full_batch(objective, sim.global_params());
    try {
      auto c = learning::fit_convergence(sim.loss_history(), objective.value(optimum.view()));
      c.gradient_bound_B = sim.max_gradient_norm();
      c.smoothness_estimate_L = learning::estimate_smoothness(objective, derive_seed(config.seed, kSmoothnessStream));
      report.convergence = std::move(c);
    } catch (const FitError& e) {
      report.convergence_note = e.what();
    }
  }

  if (config.benchmark) {
    std::ofstream bench(report.out_dir / "bench.csv");
    if (!bench) throw Error("cannot write " + (report.out_dir / "bench.csv").string());
    bench << pqc::timing_csv_header() << '\n';
    for (const auto& id : pqc::post_quantum_scheme_ids()) {
      report.timings.push_back(pqc::timing_probe(id, config.bench_message_len, config.bench_trials, config.seed));
      bench << pqc::timing_csv_row(report.timings.back()) << '\n';
    }
  }

  if (config.attack_sim) {
    topology::SelectionPolicy policy{config.policy, config.fixed_server, derive_seed(config.seed, kPolicyStream)};
    const auto strategy = config.adversary.mode == AttackMode::kServerAttack
                              ? config.adversary.strategy
                              : topology::AdversaryStrategy::guess_uniform(derive_seed(config.seed, kPolicyStream, 1));
    report.attack = topology::simulate_attack(policy, config.n_devices, strategy, config.attack_trials);
  }

  std::ofstream json_out(report.out_dir / "report.json");
  if (!json_out) throw Error("cannot write " + (report.out_dir / "report.json").string());
  json_out << nlohmann::json(report).dump(2) << '\n';
  if (!json_out) throw Error("write failed: " + (report.out_dir / "report.json").string());

  if (log != nullptr) {
    const auto& last = report.rounds.back();
    std::size_t degenerate = 0;
    for (const auto& l : report.rounds) degenerate += l.degenerate ? 1 : 0;
    *log << "done: " << report.rounds.size() << " rounds, final test accuracy " << last.test_accuracy
         << ", " << degenerate << " degenerate round(s), output in " << report.out_dir.string() << '\n';
  }
  return report;
}

}  // namespace pqfl
