#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pqfl/bytes.hpp"

namespace pqfl {

namespace pqc {
class KeyPair;
}

/// Model weights. Every element is finite; construction enforces it.
class ParamVector {
 public:
  ParamVector() = default;
  /// Throws DomainError if any value is NaN or infinite.
  explicit ParamVector(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> view() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::size_t kMaxIdLength = 255;

/// A signed model update: the {signature, params, public key} triple sent by a
/// device, plus the header fields bound into the signature.
struct UpdateEnvelope {
  std::uint8_t protocol_version = kProtocolVersion;
  std::uint64_t round = 0;
  std::string device_id;
  std::string scheme_id;
  ParamVector params;
  Bytes public_key;
  Bytes signature;
};

/// Wire layout of the signed message, all integers little-endian:
///
///   0x01 | round u64 | len u8 | device_id | len u8 | scheme_id | count u32 | count x f64
///
/// Throws EncodingError for an empty or >255-byte device_id, a >255-byte
/// scheme_id, or more than 2^32-1 params.
Bytes canonical_encode(std::uint64_t round, std::string_view device_id, std::string_view scheme_id,
                       const ParamVector& params);

/// The header and params recovered from a canonical message.
struct CanonicalMessage {
  std::uint64_t round = 0;
  std::string device_id;
  std::string scheme_id;
  ParamVector params;
};

/// Inverse of canonical_encode. Throws EncodingError on framing errors and
/// DomainError on non-finite params.
CanonicalMessage canonical_decode(ByteSpan bytes);

/// canonical_encode over the envelope's own header and params.
Bytes signed_message(const UpdateEnvelope& envelope);

/// Signs params for (round, device_id) with the key pair's scheme.
UpdateEnvelope sign_update(const ParamVector& params, std::uint64_t round, std::string device_id,
                           const pqc::KeyPair& keys);

enum class RejectReason {
  kBadSignature,
  kMalformed,
  kUnknownScheme,
  kStaleRound,
  kDuplicate,
  kKeyMismatch,
};

std::string_view to_string(RejectReason reason) noexcept;

class Verdict {
 public:
  static Verdict accept() noexcept { return Verdict(true, RejectReason::kMalformed); }
  static Verdict reject(RejectReason reason) noexcept { return Verdict(false, reason); }

  bool accepted() const noexcept { return accepted_; }
  /// Only meaningful when !accepted().
  RejectReason reason() const noexcept { return reason_; }

  friend bool operator==(const Verdict& a, const Verdict& b) noexcept {
    return a.accepted_ == b.accepted_ && (a.accepted_ || a.reason_ == b.reason_);
  }

 private:
  Verdict(bool accepted, RejectReason reason) : accepted_(accepted), reason_(reason) {}
  bool accepted_;
  RejectReason reason_;
};

/// Checks the signature over the envelope's own header and params. Never
/// throws: anything unparseable is rejected as malformed.
Verdict verify_update(const UpdateEnvelope& envelope) noexcept;

/// Device id -> public key registered at key setup.
using KeyDirectory = std::map<std::string, Bytes, std::less<>>;

struct FilterReport {
  std::vector<std::string> accepted;
  std::vector<std::pair<std::string, RejectReason>> rejected;
  std::vector<ParamVector> accepted_params;  // same order as `accepted`
};

/// Splits envelopes into accepted and rejected. Rejection order of checks:
/// stale round, public key not matching `pinned_keys` (when given), signature,
/// then duplicate device id (the first verified envelope of a device wins).
FilterReport filter_updates(std::span<const UpdateEnvelope> envelopes, std::uint64_t expected_round,
                            const KeyDirectory* pinned_keys = nullptr);

/// Element-wise unweighted mean, summed left to right in input order.
/// Throws AggregationError on an empty list and DomainError on length mismatch.
ParamVector fed_avg(std::span<const ParamVector> updates);

void to_json(nlohmann::json& j, const UpdateEnvelope& e);
void from_json(const nlohmann::json& j, UpdateEnvelope& e);

}  // namespace pqfl
