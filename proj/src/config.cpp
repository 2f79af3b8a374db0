#include <fstream>
#include <sstream>

#include "pqfl/error.hpp"
#include "pqfl/orchestrator.hpp"

namespace pqfl {
namespace {

std::string_view schedule_name(learning::StepSchedule s) {
  return s == learning::StepSchedule::kConstant ? "constant" : "inv_sqrt";
}

learning::StepSchedule parse_schedule(std::string_view name) {
  if (name == "constant") return learning::StepSchedule::kConstant;
  if (name == "inv_sqrt") return learning::StepSchedule::kInvSqrt;
  throw DomainError("unknown learning-rate schedule '" + std::string(name) + "'");
}

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  try {
    if (text.empty() || text.front() < '0' || text.front() > '9') throw std::invalid_argument("sign");
    std::size_t used = 0;
    value = std::stoull(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw DomainError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

AdversarySpec AdversarySpec::parse(std::string_view text) {
  AdversarySpec spec;
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (kind == "none") {
    if (!rest.empty()) throw DomainError("adversary 'none' takes no argument");
    return spec;
  }
  if (kind == "tamper" || kind == "forge") {
    spec.mode = kind == "tamper" ? AttackMode::kTamper : AttackMode::kForge;
    spec.k = parse_count(rest, "adversary count");
    return spec;
  }
  if (kind == "server_attack") {
    spec.mode = AttackMode::kServerAttack;
    const auto colon2 = rest.find(':');
    const auto strategy = topology::parse_adversary_kind(rest.substr(0, colon2));
    spec.strategy.kind = strategy;
    if (strategy == topology::AdversaryKind::kGuessFixed) {
      spec.strategy.target = colon2 == std::string_view::npos ? "d0" : std::string(rest.substr(colon2 + 1));
    }
    return spec;
  }
  throw DomainError("unknown adversary '" + std::string(text) + "'");
}

std::string AdversarySpec::to_string() const {
  switch (mode) {
    case AttackMode::kNone: return "none";
    case AttackMode::kTamper: return "tamper:" + std::to_string(k);
    case AttackMode::kForge: return "forge:" + std::to_string(k);
    case AttackMode::kServerAttack: {
      std::string s = "server_attack:" + std::string(topology::to_string(strategy.kind));
      if (strategy.kind == topology::AdversaryKind::kGuessFixed) s += ":" + strategy.target;
      return s;
    }
  }
  return "none";
}

void ExperimentConfig::validate() const {
  if (n_devices < 2) throw DomainError("config: n_devices must be >= 2");
  if (rounds < 1) throw DomainError("config: rounds must be >= 1");
  pqc::require_scheme(scheme_id);
  if ((adversary.mode == AttackMode::kTamper || adversary.mode == AttackMode::kForge) &&
      adversary.k > n_devices) {
    throw DomainError("config: adversary k exceeds n_devices");
  }
  if (m < 0) throw DomainError("config: m must be >= 0");
  if (dataset.kind == DatasetSource::Kind::kSynthetic && m > dataset.classes) {
    throw DomainError("config: m exceeds the class count");
  }
  if (!(eta0 > 0.0)) throw DomainError("config: eta0 must be positive");
  if (batch_size == 0) throw DomainError("config: batch_size must be >= 1");
  if (local_epochs == 0) throw DomainError("config: local_epochs must be >= 1");
  if (!(rho > 0.0)) throw DomainError("config: rho must be positive");
  if (!(bandwidth_bytes_per_sec > 0.0)) throw DomainError("config: bandwidth must be positive");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    throw DomainError("config: train_fraction must be in (0, 1)");
  }
  if (dataset.kind == DatasetSource::Kind::kIdx &&
      (dataset.train_images.empty() || dataset.train_labels.empty())) {
    throw DomainError("config: idx dataset needs train_images and train_labels");
  }
  if (bench_trials == 0 || attack_trials == 0) throw DomainError("config: trial counts must be >= 1");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json dataset;
  if (c.dataset.kind == DatasetSource::Kind::kSynthetic) {
    dataset = {{"source", "synthetic"},       {"n_samples", c.dataset.n_samples},
               {"classes", c.dataset.classes}, {"dim", c.dataset.dim},
               {"separation", c.dataset.separation}, {"train_fraction", c.dataset.train_fraction}};
  } else {
    dataset = {{"source", "idx"},
               {"train_images", c.dataset.train_images},
               {"train_labels", c.dataset.train_labels},
               {"test_images", c.dataset.test_images},
               {"test_labels", c.dataset.test_labels},
               {"train_fraction", c.dataset.train_fraction}};
  }
  j = nlohmann::json{
      {"n_devices", c.n_devices},
      {"rounds", c.rounds},
      {"scheme", c.scheme_id},
      {"seed", c.seed},
      {"policy", {{"kind", topology::to_string(c.policy)}, {"fixed_device", c.fixed_server}}},
      {"dataset", dataset},
      {"m", c.m},
      {"sgd",
       {{"eta0", c.eta0},
        {"schedule", schedule_name(c.schedule)},
        {"batch_size", c.batch_size},
        {"local_epochs", c.local_epochs},
        {"rho", c.rho}}},
      {"adversary", c.adversary.to_string()},
      {"bandwidth_bytes_per_sec", c.bandwidth_bytes_per_sec},
      {"convergence", c.convergence},
      {"benchmark", {{"enabled", c.benchmark}, {"trials", c.bench_trials}, {"message_len", c.bench_message_len}}},
      {"attack_sim", {{"enabled", c.attack_sim}, {"trials", c.attack_trials}}},
      {"out_dir", c.out_dir},
  };
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  try {
    read_opt(j, "n_devices", c.n_devices);
    read_opt(j, "rounds", c.rounds);
    read_opt(j, "scheme", c.scheme_id);
    read_opt(j, "seed", c.seed);
    read_opt(j, "m", c.m);
    read_opt(j, "bandwidth_bytes_per_sec", c.bandwidth_bytes_per_sec);
    read_opt(j, "convergence", c.convergence);
    read_opt(j, "out_dir", c.out_dir);
    if (auto it = j.find("policy"); it != j.end()) {
      if (auto k = it->find("kind"); k != it->end()) c.policy = topology::parse_policy_kind(k->get<std::string>());
      read_opt(*it, "fixed_device", c.fixed_server);
    }
    if (auto it = j.find("dataset"); it != j.end()) {
      auto& d = c.dataset;
      std::string source = "synthetic";
      read_opt(*it, "source", source);
      if (source == "synthetic") {
        d.kind = DatasetSource::Kind::kSynthetic;
      } else if (source == "idx") {
        d.kind = DatasetSource::Kind::kIdx;
      } else {
        throw DomainError("config: unknown dataset source '" + source + "'");
      }
      read_opt(*it, "n_samples", d.n_samples);
      read_opt(*it, "classes", d.classes);
      read_opt(*it, "dim", d.dim);
      read_opt(*it, "separation", d.separation);
      read_opt(*it, "train_fraction", d.train_fraction);
      read_opt(*it, "train_images", d.train_images);
      read_opt(*it, "train_labels", d.train_labels);
      read_opt(*it, "test_images", d.test_images);
      read_opt(*it, "test_labels", d.test_labels);
    }
    if (auto it = j.find("sgd"); it != j.end()) {
      read_opt(*it, "eta0", c.eta0);
      if (auto s = it->find("schedule"); s != it->end()) c.schedule = parse_schedule(s->get<std::string>());
      read_opt(*it, "batch_size", c.batch_size);
      read_opt(*it, "local_epochs", c.local_epochs);
      read_opt(*it, "rho", c.rho);
    }
    if (auto it = j.find("adversary"); it != j.end()) {
      c.adversary = AdversarySpec::parse(it->get<std::string>());
    }
    if (auto it = j.find("benchmark"); it != j.end()) {
      read_opt(*it, "enabled", c.benchmark);
      read_opt(*it, "trials", c.bench_trials);
      read_opt(*it, "message_len", c.bench_message_len);
    }
    if (auto it = j.find("attack_sim"); it != j.end()) {
      read_opt(*it, "enabled", c.attack_sim);
      read_opt(*it, "trials", c.attack_trials);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  from_json(j, c);
  return c;
}

}  // namespace pqfl
