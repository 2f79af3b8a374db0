#include <algorithm>
#include <random>

#include "doctest.h"
#include "pqfl/error.hpp"
#include "pqfl/pqc.hpp"

using namespace pqfl;

TEST_CASE("registry contents") {
  const auto& reg = pqc::registry();
  auto has = [&](std::string_view id) {
    return std::any_of(reg.begin(), reg.end(), [&](const auto& d) { return d.scheme_id == id; });
  };
  CHECK(has("dilithium2"));
  CHECK(has("falcon512"));
  CHECK(has("sphincsplus-sha2-128f"));
  REQUIRE(has("mock"));
  CHECK_FALSE(pqc::require_scheme("mock").post_quantum);
  CHECK(pqc::require_scheme("dilithium2").security_level == 2);

  std::vector<std::string> ids;
  for (const auto& d : reg) {
    ids.push_back(d.scheme_id);
    CHECK((d.security_level == 1 || d.security_level == 2 || d.security_level == 3 || d.security_level == 5));
  }
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());

  // Stable ordering across calls.
  CHECK(&pqc::registry() == &reg);
  CHECK(pqc::post_quantum_scheme_ids() == std::vector<std::string>{"dilithium2", "falcon512", "sphincsplus-sha2-128f"});
}

TEST_CASE("keygen produces keys of the advertised length") {
  // Reference lengths published with each parameter set.
  CHECK(pqc::require_scheme("dilithium2").public_key_len == 1312);
  CHECK(pqc::require_scheme("dilithium2").signature_len_max == 2420);
  CHECK(pqc::require_scheme("falcon512").public_key_len == 897);
  CHECK(pqc::require_scheme("falcon512").signature_len_max == 752);
  CHECK(pqc::require_scheme("sphincsplus-sha2-128f").public_key_len == 32);
  CHECK(pqc::require_scheme("sphincsplus-sha2-128f").signature_len_max == 17088);
  for (const auto& d : pqc::registry()) {
    CAPTURE(d.scheme_id);
    const auto keys = pqc::keygen(d.scheme_id);
    CHECK(keys.public_key().size() == d.public_key_len);
    CHECK(keys.scheme_id() == d.scheme_id);
    const auto sig = keys.sign(as_bytes("x"));
    CHECK(sig.size() <= d.signature_len_max);
  }
}

TEST_CASE("keygen determinism and errors") {
  CHECK(pqc::keygen("mock", 7).public_key() == pqc::keygen("mock", 7).public_key());
  CHECK(pqc::keygen("mock", 7).public_key() != pqc::keygen("mock", 8).public_key());
  CHECK(pqc::keygen("dilithium2").public_key() != pqc::keygen("dilithium2").public_key());
  CHECK_THROWS_AS(pqc::keygen("nope"), RegistryError);
  CHECK_THROWS_AS(pqc::require_scheme("nope"), RegistryError);
  CHECK(pqc::find_scheme("nope") == nullptr);
}

TEST_CASE("sign / verify per scheme") {
  std::mt19937_64 rng(3);
  for (const auto& d : pqc::registry()) {
    CAPTURE(d.scheme_id);
    const auto keys = pqc::keygen(d.scheme_id, 1);
    const Bytes empty;
    const auto sig_empty = pqc::sign(keys, empty);
    CHECK(pqc::verify(d.scheme_id, keys.public_key(), empty, sig_empty));

    Bytes msg(100);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
    const auto sig = pqc::sign(keys, msg);
    CHECK(pqc::verify(d.scheme_id, keys.public_key(), msg, sig));

    Bytes longer = msg;
    longer.push_back(0);
    CHECK_FALSE(pqc::verify(d.scheme_id, keys.public_key(), longer, sig));
    CHECK_FALSE(pqc::verify(d.scheme_id, keys.public_key(), empty, sig));

    // Wrong lengths and garbage never throw.
    Bytes short_sig(sig.begin(), sig.end() - 1);
    CHECK_FALSE(pqc::verify(d.scheme_id, keys.public_key(), msg, short_sig));
    Bytes long_sig = sig;
    long_sig.resize(d.signature_len_max + 1);
    CHECK_FALSE(pqc::verify(d.scheme_id, keys.public_key(), msg, long_sig));
    CHECK_FALSE(pqc::verify(d.scheme_id, Bytes(3, 1), msg, sig));
    CHECK_FALSE(pqc::verify(d.scheme_id, keys.public_key(), msg, Bytes{}));
    Bytes garbage(d.signature_len_max);
    for (auto& b : garbage) b = static_cast<std::uint8_t>(rng());
    CHECK_FALSE(pqc::verify(d.scheme_id, keys.public_key(), msg, garbage));
    CHECK_FALSE(pqc::verify("nope", keys.public_key(), msg, sig));
  }
}

TEST_CASE("mock scheme is a keyed hash: equal inputs give equal signatures") {
  const auto a = pqc::keygen("mock", 11);
  const auto b = pqc::keygen("mock", 11);
  const Bytes msg = {1, 2, 3};
  CHECK(a.sign(msg) == b.sign(msg));
  const auto tag = hmac_sha256(a.public_key(), msg);
  CHECK(a.sign(msg) == Bytes(tag.begin(), tag.end()));
  CHECK(a.sign(msg) != pqc::keygen("mock", 12).sign(msg));
}

TEST_CASE("property: round trip for every scheme") {
  std::mt19937_64 rng(17);
  for (const auto& d : pqc::registry()) {
    CAPTURE(d.scheme_id);
    const int cases = d.post_quantum ? (d.scheme_id.starts_with("sphincs") ? 20 : 50) : 1000;
    const auto keys = pqc::keygen(d.scheme_id, 2);
    for (int i = 0; i < cases; ++i) {
      Bytes msg(rng() % 300);
      for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
      REQUIRE(pqc::verify(d.scheme_id, keys.public_key(), msg, keys.sign(msg)));
    }
  }
}

TEST_CASE("summarize: nearest rank") {
  const auto one = pqc::summarize({42});
  CHECK(one.min_ns == 42);
  CHECK(one.median_ns == 42);
  CHECK(one.p95_ns == 42);
  std::vector<std::int64_t> xs;
  for (int i = 100; i >= 1; --i) xs.push_back(i);
  const auto s = pqc::summarize(xs);
  CHECK(s.min_ns == 1);
  CHECK(s.median_ns == 50);
  CHECK(s.p95_ns == 95);
  CHECK_THROWS_AS(pqc::summarize({}), DomainError);
}

TEST_CASE("timing_probe") {
  SUBCASE("trials=1 collapses the summary") {
    const auto r = pqc::timing_probe("mock", 64, 1);
    CHECK(r.trials == 1);
    CHECK(r.sign.min_ns == r.sign.median_ns);
    CHECK(r.sign.median_ns == r.sign.p95_ns);
    CHECK(r.verify.min_ns == r.verify.p95_ns);
  }
  SUBCASE("real scheme durations are positive and ordered") {
    const auto r = pqc::timing_probe("dilithium2", 1024, 10);
    for (const auto* s : {&r.key_gen, &r.sign, &r.verify}) {
      CHECK(s->min_ns > 0);
      CHECK(s->min_ns <= s->median_ns);
      CHECK(s->median_ns <= s->p95_ns);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(pqc::timing_probe("mock", 8, 0), DomainError);
    CHECK_THROWS_AS(pqc::timing_probe("nope", 8, 1), RegistryError);
  }
  SUBCASE("csv") {
    pqc::TimingReport r;
    r.scheme_id = "x";
    r.message_len = 8;
    r.trials = 3;
    r.key_gen = {1, 2, 3};
    r.sign = {4, 5, 6};
    r.verify = {7, 8, 9};
    CHECK(pqc::timing_csv_header() ==
          "scheme_id,message_len,trials,key_ns_med,sign_ns_med,verify_ns_med,sign_ns_p95,verify_ns_p95");
    CHECK(pqc::timing_csv_row(r) == "x,8,3,2,5,8,6,9");
  }
}
