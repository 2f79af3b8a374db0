#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pqfl/cli.hpp"
#include "pqfl/envelope.hpp"

using namespace pqfl;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pqfl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pqfl_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST_CASE("run writes one CSV row per round") {
  const auto dir = scratch("run");
  const auto r = cli({"run", "--devices", "4", "--rounds", "2", "--scheme", "mock", "--seed", "1", "--out",
                      dir.string(), "--quiet"});
  CHECK(r.code == 0);
  std::ifstream in(dir / "rounds.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(lines(ss.str()).size() == 3);
  CHECK(std::filesystem::exists(dir / "report.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("bench-schemes covers every post-quantum scheme and size") {
  const auto r = cli({"bench-schemes", "--trials", "1"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 1 + 3 * 3);
  CHECK(rows[0] == "scheme_id,message_len,trials,key_ns_med,sign_ns_med,verify_ns_med,sign_ns_p95,verify_ns_p95");
  std::set<std::string> schemes;
  std::set<std::string> sizes;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    schemes.insert(rows[i].substr(0, rows[i].find(',')));
    const auto rest = rows[i].substr(rows[i].find(',') + 1);
    sizes.insert(rest.substr(0, rest.find(',')));
  }
  CHECK(schemes == std::set<std::string>{"dilithium2", "falcon512", "sphincsplus-sha2-128f"});
  CHECK(sizes == std::set<std::string>{"1024", "8192", "65536"});
}

TEST_CASE("attack-sim prints JSON") {
  auto r = cli({"attack-sim", "--n", "10", "--trials", "1000", "--policy", "fixed"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("hit_rate") == 1.0);

  r = cli({"attack-sim", "--n", "5", "10", "--trials", "100", "--policy", "fixed", "uniform"});
  REQUIRE(r.code == 0);
  j = nlohmann::json::parse(r.out);
  CHECK(j.is_array());
  CHECK(j.size() == 4);
}

TEST_CASE("partition-stats prints a histogram") {
  auto r = cli({"partition-stats", "--clients", "4", "--m", "1", "--samples", "40", "--classes", "4"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "client,c0,c1,c2,c3,total");
  CHECK(rows[1] == "d0,10,0,0,0,10");

  r = cli({"partition-stats", "--images", PQFL_TEST_DATA_DIR "/mnist4-images.idx3-ubyte", "--labels",
           PQFL_TEST_DATA_DIR "/mnist4-labels.idx1-ubyte", "--clients", "2", "--m", "2"});
  CHECK(r.code == 0);
}

TEST_CASE("usage errors exit 1, runtime errors exit 2") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"run", "--no-such-flag"}).code == 1);
  CHECK(cli({"run", "--rounds", "0"}).code == 1);
  CHECK(cli({"partition-stats", "--images", "/nonexistent"}).code == 1);
  CHECK(cli({"--help"}).code == 0);

  const auto r = cli({"run", "--scheme", "rsa4096", "--rounds", "1", "--out", scratch("bad").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("rsa4096") != std::string::npos);
  CHECK(cli({"run", "--adversary", "tamper:x"}).code == 2);
  CHECK(cli({"partition-stats", "--clients", "3", "--m", "20"}).code == 2);
}

TEST_CASE("make-fixtures writes parseable, verifiable envelopes") {
  const auto dir = scratch("fixtures");
  REQUIRE(cli({"make-fixtures", "--out", dir.string()}).code == 0);
  for (const char* name : {"images-idx3-ubyte", "labels-idx1-ubyte", "synthetic.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  auto read = [&](const char* name) {
    std::ifstream in(dir / name);
    return nlohmann::json::parse(in).get<UpdateEnvelope>();
  };
  CHECK(verify_update(read("envelope_mock.json")).accepted());
  CHECK(verify_update(read("envelope_dilithium2.json")).accepted());
  CHECK(verify_update(read("envelope_mock_tampered.json")) == Verdict::reject(RejectReason::kBadSignature));
  std::filesystem::remove_all(dir);
}
