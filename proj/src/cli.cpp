#include "pqfl/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "pqfl/error.hpp"
#include "pqfl/orchestrator.hpp"

namespace pqfl {
namespace {

namespace fs = std::filesystem;

struct RunOptions {
  std::string config_path;
  std::optional<std::size_t> rounds, devices;
  std::optional<std::string> scheme, adversary, out, policy;
  std::optional<int> m;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct BenchOptions {
  std::size_t trials = 30;
  std::vector<std::size_t> sizes = {1024, 8192, 65536};
  bool include_mock = false;
  std::uint64_t seed = 0;
  std::string out;
};

struct AttackOptions {
  std::vector<std::size_t> n = {10};
  std::size_t trials = 10000;
  std::vector<std::string> policies = {"uniform"};
  std::vector<std::string> adversaries = {"fixed"};
  std::string target = "d0";
  std::string fixed_server = "d0";
  std::uint64_t seed = 1;
  std::string out;
};

struct PartitionOptions {
  std::size_t clients = 10;
  int m = 2;
  std::size_t samples = 2000;
  int classes = 10;
  std::size_t dim = 3;
  double separation = 4.0;
  std::uint64_t seed = 42;
  std::string images, labels;
};

struct FixtureOptions {
  std::string out = "fixtures";
  std::uint64_t seed = 7;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

int cmd_run(const RunOptions& o, std::ostream& out) {
  ExperimentConfig config = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.rounds) config.rounds = *o.rounds;
  if (o.devices) config.n_devices = *o.devices;
  if (o.scheme) config.scheme_id = *o.scheme;
  if (o.m) config.m = *o.m;
  if (o.adversary) config.adversary = AdversarySpec::parse(*o.adversary);
  if (o.seed) config.seed = *o.seed;
  if (o.out) config.out_dir = *o.out;
  if (o.policy) config.policy = topology::parse_policy_kind(*o.policy);
  run_experiment(std::move(config), o.quiet ? nullptr : &out);
  return kExitOk;
}

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  std::vector<std::string> schemes = pqc::post_quantum_scheme_ids();
  if (o.include_mock) schemes.push_back("mock");
  std::ostringstream csv;
  csv << pqc::timing_csv_header() << '\n';
  for (const auto& id : schemes) {
    for (std::size_t len : o.sizes) {
      csv << pqc::timing_csv_row(pqc::timing_probe(id, len, o.trials, o.seed)) << '\n';
    }
  }
  out << csv.str();
  if (!o.out.empty()) write_text(o.out, csv.str());
  return kExitOk;
}

int cmd_attack(const AttackOptions& o, std::ostream& out) {
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t n : o.n) {
    for (const auto& p : o.policies) {
      for (const auto& a : o.adversaries) {
        topology::SelectionPolicy policy{topology::parse_policy_kind(p), o.fixed_server, o.seed};
        topology::AdversaryStrategy adversary{topology::parse_adversary_kind(a), o.target,
                                              derive_seed(o.seed, 0x616476)};
        results.push_back(topology::simulate_attack(policy, n, adversary, o.trials));
      }
    }
  }
  const auto doc = results.size() == 1 ? results.front() : results;
  out << doc.dump(2) << '\n';
  if (!o.out.empty()) write_text(o.out, doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_partition(const PartitionOptions& o, std::ostream& out) {
  const learning::Dataset data =
      o.images.empty() ? learning::make_synthetic(o.seed, o.samples, o.classes, o.dim, o.separation)
                       : learning::load_idx(o.images, o.labels);
  const auto spec = learning::cycle_m_partition(data, o.clients, o.m);
  const auto hist = learning::class_histogram(data, spec);
  out << "client";
  for (int c = 0; c < data.n_classes(); ++c) out << ",c" << c;
  out << ",total\n";
  for (std::size_t i = 0; i < hist.size(); ++i) {
    out << 'd' << i;
    std::size_t total = 0;
    for (auto count : hist[i]) {
      out << ',' << count;
      total += count;
    }
    out << ',' << total << '\n';
  }
  return kExitOk;
}

int cmd_fixtures(const FixtureOptions& o, std::ostream& out) {
  const fs::path dir = o.out;
  fs::create_directories(dir);

  // Four 28x28 images with labels 0..3.
  constexpr std::size_t kSide = 28;
  std::vector<std::uint8_t> pixels(4 * kSide * kSide);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>((i / (kSide * kSide)) * 31 + i % (kSide * kSide));
  }
  const std::vector<std::uint8_t> labels = {0, 1, 2, 3};
  learning::write_idx_images(dir / "images-idx3-ubyte", kSide, kSide, pixels);
  learning::write_idx_labels(dir / "labels-idx1-ubyte", labels);

  std::vector<double> values(10);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.25 * static_cast<double>(i) - 1.0;
  const ParamVector params(values);
  for (const std::string scheme : {"mock", "dilithium2"}) {
    auto keys = scheme == "mock" ? pqc::keygen(scheme, o.seed) : pqc::keygen(scheme);
    const auto env = sign_update(params, 7, "dev-03", keys);
    write_text(dir / ("envelope_" + scheme + ".json"), nlohmann::json(env).dump(2) + "\n");
    if (scheme == "mock") {
      auto tampered = env;
      auto v = tampered.params.values();
      v[0] = std::nextafter(v[0], INFINITY);
      tampered.params = ParamVector(std::move(v));
      write_text(dir / "envelope_mock_tampered.json", nlohmann::json(tampered).dump(2) + "\n");
    }
  }

  std::ostringstream csv;
  learning::write_csv(csv, learning::make_synthetic(o.seed, 40, 4, 2, 3.0));
  write_text(dir / "synthetic.csv", csv.str());

  out << "fixtures written to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-quantum signed federated learning simulator", "pqfl"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a federated experiment");
  run_cmd->add_option("--config", run.config_path, "Experiment config (JSON, comments allowed)")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--rounds", run.rounds, "Communication rounds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--devices", run.devices, "Number of devices");
  run_cmd->add_option("--scheme", run.scheme, "Signature scheme id");
  run_cmd->add_option("--m", run.m, "Classes per client (0 = all)");
  run_cmd->add_option("--adversary", run.adversary,
                      "none | tamper:K | forge:K | server_attack:fixed|uniform|last[:TARGET]");
  run_cmd->add_option("--policy", run.policy, "Server selection: fixed | uniform | reputation");
  run_cmd->add_option("--seed", run.seed, "Experiment seed");
  run_cmd->add_option("--out", run.out, "Output directory (PQFL_OUT overrides)");
  run_cmd->add_flag("--quiet", run.quiet, "No per-round progress");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench-schemes", "Time keygen/sign/verify of each scheme");
  bench_cmd->add_option("--trials", bench.trials, "Timed trials per cell")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--sizes", bench.sizes, "Message sizes in bytes");
  bench_cmd->add_flag("--include-mock", bench.include_mock, "Also time the mock scheme");
  bench_cmd->add_option("--seed", bench.seed, "Message RNG seed");
  bench_cmd->add_option("--out", bench.out, "Also write the CSV here");

  AttackOptions attack;
  auto* attack_cmd = app.add_subcommand("attack-sim", "Monte Carlo server-targeting attack");
  attack_cmd->add_option("--n", attack.n, "Device counts")->check(CLI::PositiveNumber);
  attack_cmd->add_option("--trials", attack.trials, "Trials per cell")->check(CLI::PositiveNumber);
  attack_cmd->add_option("--policy", attack.policies, "fixed | uniform | reputation");
  attack_cmd->add_option("--adversary", attack.adversaries, "fixed | uniform | last");
  attack_cmd->add_option("--target", attack.target, "Target of the fixed-guess adversary");
  attack_cmd->add_option("--fixed-server", attack.fixed_server, "Server of the fixed policy");
  attack_cmd->add_option("--seed", attack.seed, "Selection seed");
  attack_cmd->add_option("--out", attack.out, "Also write the JSON here");

  PartitionOptions part;
  auto* part_cmd = app.add_subcommand("partition-stats", "Per-client class histogram of a cycle-m split");
  part_cmd->add_option("--clients", part.clients, "Number of clients")->check(CLI::PositiveNumber);
  part_cmd->add_option("--m", part.m, "Classes per client");
  part_cmd->add_option("--samples", part.samples, "Synthetic sample count");
  part_cmd->add_option("--classes", part.classes, "Synthetic class count");
  part_cmd->add_option("--dim", part.dim, "Synthetic feature dimension");
  part_cmd->add_option("--separation", part.separation, "Synthetic class separation");
  part_cmd->add_option("--seed", part.seed, "Synthetic seed");
  part_cmd->add_option("--images", part.images, "IDX images file")->check(CLI::ExistingFile);
  part_cmd->add_option("--labels", part.labels, "IDX labels file")->check(CLI::ExistingFile);

  FixtureOptions fix;
  auto* fix_cmd = app.add_subcommand("make-fixtures", "Write IDX, envelope and CSV fixtures");
  fix_cmd->add_option("--out", fix.out, "Output directory");
  fix_cmd->add_option("--seed", fix.seed, "Mock key seed");

  try {
    app.parse(argc, argv);
    if (part_cmd->parsed() && part.images.empty() != part.labels.empty()) {
      throw CLI::ValidationError("--images and --labels must be given together");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;  // --help
    err << app.help();
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
    if (attack_cmd->parsed()) return cmd_attack(attack, out);
    if (part_cmd->parsed()) return cmd_partition(part, out);
    if (fix_cmd->parsed()) return cmd_fixtures(fix, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace pqfl
