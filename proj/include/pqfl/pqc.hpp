#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pqfl/bytes.hpp"

namespace pqfl::pqc {

/// A registered signature backend and the parameters it claims.
struct SchemeDescriptor {
  std::string scheme_id;
  int security_level = 0;  // claimed NIST category
  std::size_t public_key_len = 0;
  std::size_t signature_len_max = 0;
  bool post_quantum = false;
  std::string algorithm;  // human-readable parameter-set name
  bool fixed_signature_len = true;  // false when signatures may be shorter than the max
};

/// All registered schemes, in a stable order. The registry is immutable.
const std::vector<SchemeDescriptor>& registry();

/// nullptr when the id is not registered.
const SchemeDescriptor* find_scheme(std::string_view scheme_id) noexcept;

/// Throws RegistryError when the id is not registered.
const SchemeDescriptor& require_scheme(std::string_view scheme_id);

/// Ids of the post-quantum schemes (everything except the test scheme).
std::vector<std::string> post_quantum_scheme_ids();

namespace detail {
struct Backend;
}

/// Owns a (public, secret) key pair. The secret key has no accessor; it is only
/// reachable through sign(). Move-only, and not safe to use from two threads
/// at once.
class KeyPair {
 public:
  KeyPair(KeyPair&&) noexcept = default;
  KeyPair& operator=(KeyPair&&) noexcept = default;
  KeyPair(const KeyPair&) = delete;
  KeyPair& operator=(const KeyPair&) = delete;
  ~KeyPair();

  const std::string& scheme_id() const noexcept;
  const Bytes& public_key() const noexcept { return public_key_; }

  /// Throws CryptoError if the backend fails.
  Bytes sign(ByteSpan message) const;

 private:
  friend KeyPair keygen(std::string_view, std::optional<std::uint64_t>);
  KeyPair(const detail::Backend* backend, Bytes pk, Bytes sk)
      : backend_(backend), public_key_(std::move(pk)), secret_key_(std::move(sk)) {}

  const detail::Backend* backend_;
  Bytes public_key_;
  Bytes secret_key_;
};

/// Generates a key pair. The mock scheme is deterministic under `seed`; the
/// PQClean backends draw from the OS RNG and ignore it.
KeyPair keygen(std::string_view scheme_id, std::optional<std::uint64_t> seed = std::nullopt);

inline Bytes sign(const KeyPair& keys, ByteSpan message) { return keys.sign(message); }

/// Never throws: unknown schemes and wrong-length keys or signatures yield false.
bool verify(std::string_view scheme_id, ByteSpan public_key, ByteSpan message,
            ByteSpan signature) noexcept;

struct DurationSummary {
  std::int64_t min_ns = 0;
  std::int64_t median_ns = 0;
  std::int64_t p95_ns = 0;
};

/// Nearest-rank min / median / p95. Throws DomainError on an empty sample.
DurationSummary summarize(std::vector<std::int64_t> samples_ns);

struct TimingReport {
  std::string scheme_id;
  std::size_t trials = 0;
  std::size_t message_len = 0;
  DurationSummary key_gen;
  DurationSummary sign;
  DurationSummary verify;
};

/// Times keygen, sign and verify once per trial on fresh random messages,
/// after three untimed warm-up iterations. Throws ProbeError on any backend
/// failure.
TimingReport timing_probe(std::string_view scheme_id, std::size_t message_len, std::size_t trials,
                          std::uint64_t seed = 0);

std::string timing_csv_header();
std::string timing_csv_row(const TimingReport& report);

}  // namespace pqfl::pqc
