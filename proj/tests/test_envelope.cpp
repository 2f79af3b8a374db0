#include <bit>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "pqfl/envelope.hpp"
#include "pqfl/error.hpp"
#include "pqfl/pqc.hpp"
#include "test_support.hpp"

using namespace pqfl;
using pqfl::testing::random_device_id;
using pqfl::testing::random_params;

namespace {

Bytes hex_bytes(std::string_view hex) {
  Bytes out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

UpdateEnvelope flip_param_bit(UpdateEnvelope e, std::size_t index, int bit) {
  auto v = e.params.values();
  v[index] = std::bit_cast<double>(std::bit_cast<std::uint64_t>(v[index]) ^ (std::uint64_t{1} << bit));
  e.params = ParamVector(std::move(v));
  return e;
}

}  // namespace

TEST_CASE("canonical_encode: empty params layout") {
  const auto bytes = canonical_encode(0, "a", "m", ParamVector{});
  CHECK(bytes.size() == 17);
  CHECK(bytes == hex_bytes("01" "0000000000000000" "01" "61" "01" "6d" "00000000"));
}

TEST_CASE("canonical_encode: one zero param, round 1") {
  const auto bytes = canonical_encode(1, "a", "m", ParamVector({0.0}));
  CHECK(bytes.size() == 25);
  CHECK(bytes == hex_bytes("01" "0100000000000000" "01" "61" "01" "6d" "01000000" "0000000000000000"));
}

TEST_CASE("canonical_encode: golden digest from the independent Python encoder") {
  const ParamVector params(pqfl::testing::splitmix_params(42, 10));
  CHECK(params[0] == 0.4831297575436466);
  const auto bytes = canonical_encode(7, "dev-03", "dilithium2", params);
  CHECK(bytes.size() == 111);
  CHECK(to_hex(sha256(bytes)) == "e566a76affc0dff06256e09f638cebddcbe01857e337c589fc81d52adecd19eb");
}

TEST_CASE("canonical_encode: errors") {
  CHECK_THROWS_AS(canonical_encode(0, "", "m", ParamVector{}), EncodingError);
  CHECK_THROWS_AS(canonical_encode(0, std::string(256, 'x'), "m", ParamVector{}), EncodingError);
  CHECK_THROWS_AS(canonical_encode(0, "a", std::string(256, 'x'), ParamVector{}), EncodingError);
  CHECK_NOTHROW(canonical_encode(0, std::string(255, 'x'), std::string(255, 'y'), ParamVector{}));
  CHECK_THROWS_AS(ParamVector({1.0, NAN}), DomainError);
  CHECK_THROWS_AS(ParamVector({INFINITY}), DomainError);
}

TEST_CASE("canonical_encode: deterministic, decodable and injective on random tuples") {
  std::mt19937_64 rng(11);
  std::set<Bytes> seen;
  for (int i = 0; i < 500; ++i) {
    const std::uint64_t round = rng() % 4;
    const auto device = random_device_id(rng);
    const std::string scheme = i % 2 ? "mock" : "dilithium2";
    const auto params = random_params(rng, rng() % 5);
    const auto bytes = canonical_encode(round, device, scheme, params);
    CHECK(bytes == canonical_encode(round, device, scheme, params));
    const auto decoded = canonical_decode(bytes);
    CHECK(decoded.round == round);
    CHECK(decoded.device_id == device);
    CHECK(decoded.scheme_id == scheme);
    CHECK(decoded.params == params);
    seen.insert(bytes);
  }
  // Framing ambiguity probes: shifting bytes between adjacent fields.
  seen.insert(canonical_encode(0, "ab", "c", ParamVector{}));
  seen.insert(canonical_encode(0, "a", "bc", ParamVector{}));
  CHECK(seen.size() == 502);
}

TEST_CASE("canonical_decode rejects framing errors") {
  auto bytes = canonical_encode(3, "dev", "mock", ParamVector({1.0, 2.0}));
  CHECK_THROWS_AS(canonical_decode(ByteSpan(bytes).first(bytes.size() - 1)), EncodingError);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(canonical_decode(extra), EncodingError);
  auto version = bytes;
  version[0] = 2;
  CHECK_THROWS_AS(canonical_decode(version), EncodingError);
}

TEST_CASE("sign_update / verify_update round trip, mock at volume") {
  std::mt19937_64 rng(1);
  auto keys = pqc::keygen("mock", 5);
  for (int i = 0; i < 1000; ++i) {
    const auto params = random_params(rng, 1 + rng() % 16);
    const auto env = sign_update(params, rng(), random_device_id(rng), keys);
    REQUIRE(verify_update(env).accepted());
  }
}

TEST_CASE("sign_update / verify_update round trip, post-quantum schemes") {
  std::mt19937_64 rng(2);
  for (const auto& id : pqc::post_quantum_scheme_ids()) {
    CAPTURE(id);
    auto keys = pqc::keygen(id);
    const int cases = id.starts_with("sphincs") ? 50 : 60;
    for (int i = 0; i < cases; ++i) {
      const auto env = sign_update(random_params(rng, 8), rng() % 100, random_device_id(rng), keys);
      REQUIRE(verify_update(env).accepted());
    }
  }
}

TEST_CASE("verify_update rejects post-signing changes") {
  auto keys = pqc::keygen("dilithium2");
  auto other = pqc::keygen("dilithium2");
  const auto env = sign_update(ParamVector({0.5, -1.25, 3.0}), 4, "dev-1", keys);
  REQUIRE(verify_update(env).accepted());

  SUBCASE("param perturbed by one ulp") {
    auto e = env;
    auto v = e.params.values();
    v[1] = std::nextafter(v[1], INFINITY);
    e.params = ParamVector(v);
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kBadSignature));
  }
  SUBCASE("public key swapped for another device's") {
    auto e = env;
    e.public_key = other.public_key();
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kBadSignature));
  }
  SUBCASE("header fields are bound") {
    auto e = env;
    e.round = 5;
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kBadSignature));
    e = env;
    e.device_id = "dev-2";
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kBadSignature));
  }
  SUBCASE("scheme mismatch") {
    auto e = env;
    e.scheme_id = "falcon512";
    CHECK_FALSE(verify_update(e).accepted());
    auto mock_keys = pqc::keygen("mock", 1);
    auto m = sign_update(env.params, 4, "dev-1", mock_keys);
    m.scheme_id = "dilithium2";
    CHECK_FALSE(verify_update(m).accepted());
  }
  SUBCASE("garbage key and signature bytes") {
    auto e = env;
    e.signature = Bytes(7, 0xff);
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kMalformed));
    e = env;
    e.public_key.pop_back();
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kMalformed));
    e = env;
    e.signature.clear();
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kMalformed));
    e = env;
    e.device_id.clear();
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kMalformed));
    e = env;
    e.protocol_version = 9;
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kMalformed));
  }
  SUBCASE("unknown scheme") {
    auto e = env;
    e.scheme_id = "nope";
    CHECK(verify_update(e) == Verdict::reject(RejectReason::kUnknownScheme));
  }
}

TEST_CASE("tamper completeness: single-bit flips in the signed message region") {
  std::mt19937_64 rng(99);
  for (const auto& desc : pqc::registry()) {
    CAPTURE(desc.scheme_id);
    auto keys = pqc::keygen(desc.scheme_id, 3);
    const auto env = sign_update(random_params(rng, 6), 12, "device-7", keys);
    const Bytes message = signed_message(env);
    for (int trial = 0; trial < 256; ++trial) {
      Bytes flipped = message;
      const std::size_t bit = rng() % (flipped.size() * 8);
      flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK_FALSE(pqc::verify(env.scheme_id, env.public_key, flipped, env.signature));
      // Where the flipped message still parses, the envelope built from it must be rejected too.
      try {
        const auto m = canonical_decode(flipped);
        UpdateEnvelope e = env;
        e.round = m.round;
        e.device_id = m.device_id;
        e.scheme_id = m.scheme_id;
        e.params = m.params;
        CHECK_FALSE(verify_update(e).accepted());
      } catch (const Error&) {
        // Unparseable: the server cannot even rebuild an envelope from it.
      }
    }
  }
}

TEST_CASE("filter_updates") {
  auto keys = std::vector<pqc::KeyPair>{};
  for (int i = 0; i < 7; ++i) keys.push_back(pqc::keygen("mock", static_cast<std::uint64_t>(i)));
  std::vector<UpdateEnvelope> envs;
  for (int i = 0; i < 5; ++i) {
    envs.push_back(sign_update(ParamVector({double(i), double(-i)}), 4, "d" + std::to_string(i), keys[i]));
  }

  SUBCASE("all valid") {
    const auto r = filter_updates(envs, 4);
    CHECK(r.accepted.size() == 5);
    CHECK(r.rejected.empty());
    CHECK(r.accepted_params[3] == ParamVector({3.0, -3.0}));
  }
  SUBCASE("five valid plus two tampered") {
    for (int i = 5; i < 7; ++i) {
      auto e = sign_update(ParamVector({1.0, 1.0}), 4, "d" + std::to_string(i), keys[i]);
      envs.push_back(flip_param_bit(e, 0, 3));
    }
    const auto r = filter_updates(envs, 4);
    CHECK(r.accepted.size() == 5);
    REQUIRE(r.rejected.size() == 2);
    for (const auto& [id, reason] : r.rejected) CHECK(reason == RejectReason::kBadSignature);
  }
  SUBCASE("stale round") {
    const std::vector<UpdateEnvelope> one = {sign_update(ParamVector({1.0}), 3, "d0", keys[0])};
    const auto r = filter_updates(one, 4);
    CHECK(r.accepted.empty());
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].second == RejectReason::kStaleRound);
  }
  SUBCASE("duplicate device id: first verified wins, order preserved") {
    envs.insert(envs.begin(), flip_param_bit(envs[2], 0, 1));  // tampered copy of d2 first
    envs.push_back(sign_update(ParamVector({9.0, 9.0}), 4, "d2", keys[2]));
    const auto r = filter_updates(envs, 4);
    CHECK(r.accepted == std::vector<std::string>{"d0", "d1", "d2", "d3", "d4"});
    CHECK(r.accepted_params[2] == ParamVector({2.0, -2.0}));
    REQUIRE(r.rejected.size() == 2);
    CHECK(r.rejected[0] == std::pair<std::string, RejectReason>{"d2", RejectReason::kBadSignature});
    CHECK(r.rejected[1] == std::pair<std::string, RejectReason>{"d2", RejectReason::kDuplicate});
  }
  SUBCASE("pinned keys") {
    KeyDirectory dir;
    for (int i = 0; i < 5; ++i) dir.emplace("d" + std::to_string(i), keys[i].public_key());
    // Attacker re-signs d1's slot with its own key.
    envs[1] = sign_update(ParamVector({-50.0, 50.0}), 4, "d1", keys[6]);
    CHECK(verify_update(envs[1]).accepted());
    const auto r = filter_updates(envs, 4, &dir);
    CHECK(r.accepted.size() == 4);
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].second == RejectReason::kKeyMismatch);
  }
  SUBCASE("conservation on a mixed batch") {
    envs.push_back(sign_update(ParamVector({1.0, 2.0}), 2, "d5", keys[5]));
    envs.push_back(flip_param_bit(envs[0], 1, 0));
    envs.back().device_id = "d6";
    auto bogus = envs[3];
    bogus.scheme_id = "nope";
    envs.push_back(bogus);
    const auto r = filter_updates(envs, 4);
    CHECK(r.accepted.size() + r.rejected.size() == envs.size());
    std::multiset<std::string> ids;
    for (const auto& id : r.accepted) ids.insert(id);
    for (const auto& [id, reason] : r.rejected) ids.insert(id);
    std::multiset<std::string> expected;
    for (const auto& e : envs) expected.insert(e.device_id);
    CHECK(ids == expected);
  }
}

TEST_CASE("fed_avg examples") {
  const std::vector<ParamVector> same = {ParamVector({1, 2}), ParamVector({1, 2}), ParamVector({1, 2})};
  CHECK(fed_avg(same) == ParamVector({1, 2}));
  const std::vector<ParamVector> two = {ParamVector({0, 2}), ParamVector({2, 4})};
  CHECK(fed_avg(two) == ParamVector({1, 3}));
  CHECK_THROWS_AS(fed_avg(std::vector<ParamVector>{}), AggregationError);
  const std::vector<ParamVector> mismatch = {ParamVector({1}), ParamVector({1, 2})};
  CHECK_THROWS_AS(fed_avg(mismatch), DomainError);
}

TEST_CASE("fed_avg: k copies of v is v exactly; permutation invariance") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_params(rng, 9, 1e3);
    const std::vector<ParamVector> copies(1 + rng() % 11, v);
    CHECK(fed_avg(copies) == v);

    std::vector<ParamVector> vs;
    for (int i = 0; i < 7; ++i) vs.push_back(random_params(rng, 9));
    const auto a = fed_avg(vs);
    std::shuffle(vs.begin(), vs.end(), rng);
    const auto b = fed_avg(vs);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("envelope JSON fixture form") {
  auto keys = pqc::keygen("falcon512");
  const auto env = sign_update(ParamVector({0.1, -2.5e-300, 1e300}), 9, "dev-9", keys);
  const nlohmann::json j = env;
  CHECK(j.at("version") == 1);
  CHECK(j.at("public_key").get<std::string>() == base64_encode(env.public_key));
  const auto back = j.get<UpdateEnvelope>();
  CHECK(back.params == env.params);
  CHECK(back.signature == env.signature);
  CHECK(back.public_key == env.public_key);
  CHECK(verify_update(back).accepted());
}

TEST_CASE("base64 round trip at every padding length") {
  for (std::size_t n = 0; n < 10; ++n) {
    Bytes b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(0xf0 + i);
    CHECK(base64_decode(base64_encode(b)) == b);
  }
  CHECK(base64_encode(as_bytes("foobar")) == "Zm9vYmFy");
  CHECK_THROWS_AS(base64_decode("abc"), DomainError);
  CHECK_THROWS_AS(base64_decode("ab!="), DomainError);
}
