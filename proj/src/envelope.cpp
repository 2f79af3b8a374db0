#include "pqfl/envelope.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "pqfl/error.hpp"
#include "pqfl/pqc.hpp"

namespace pqfl {
namespace {

template <typename T>
void put_le(Bytes& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(ByteSpan in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw EncodingError("canonical message truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return value;
}

std::string get_short_string(ByteSpan in, std::size_t& pos) {
  const auto len = get_le<std::uint8_t>(in, pos);
  if (in.size() - pos < len) throw EncodingError("canonical message truncated");
  std::string s(reinterpret_cast<const char*>(in.data() + pos), len);
  pos += len;
  return s;
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DomainError("param " + std::to_string(i) + " is not finite");
    }
  }
}

Bytes canonical_encode(std::uint64_t round, std::string_view device_id, std::string_view scheme_id,
                       const ParamVector& params) {
  if (device_id.empty()) throw EncodingError("device_id is empty");
  if (device_id.size() > kMaxIdLength) throw EncodingError("device_id longer than 255 bytes");
  if (scheme_id.size() > kMaxIdLength) throw EncodingError("scheme_id longer than 255 bytes");
  if (params.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw EncodingError("too many params for a 32-bit count");
  }

  Bytes out;
  out.reserve(1 + 8 + 1 + device_id.size() + 1 + scheme_id.size() + 4 + 8 * params.size());
  out.push_back(kProtocolVersion);
  put_le<std::uint64_t>(out, round);
  out.push_back(static_cast<std::uint8_t>(device_id.size()));
  out.insert(out.end(), device_id.begin(), device_id.end());
  out.push_back(static_cast<std::uint8_t>(scheme_id.size()));
  out.insert(out.end(), scheme_id.begin(), scheme_id.end());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (double v : params.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

CanonicalMessage canonical_decode(ByteSpan bytes) {
  std::size_t pos = 0;
  if (get_le<std::uint8_t>(bytes, pos) != kProtocolVersion) {
    throw EncodingError("unsupported protocol version");
  }
  CanonicalMessage msg;
  msg.round = get_le<std::uint64_t>(bytes, pos);
  msg.device_id = get_short_string(bytes, pos);
  if (msg.device_id.empty()) throw EncodingError("device_id is empty");
  msg.scheme_id = get_short_string(bytes, pos);
  const auto count = get_le<std::uint32_t>(bytes, pos);
  if ((bytes.size() - pos) / 8 < count) throw EncodingError("canonical message truncated");
  std::vector<double> values(count);
  for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  if (pos != bytes.size()) throw EncodingError("trailing bytes after params");
  msg.params = ParamVector(std::move(values));
  return msg;
}

Bytes signed_message(const UpdateEnvelope& e) {
  return canonical_encode(e.round, e.device_id, e.scheme_id, e.params);
}

UpdateEnvelope sign_update(const ParamVector& params, std::uint64_t round, std::string device_id,
                           const pqc::KeyPair& keys) {
  UpdateEnvelope e;
  e.round = round;
  e.device_id = std::move(device_id);
  e.scheme_id = keys.scheme_id();
  e.params = params;
  e.public_key = keys.public_key();
  e.signature = keys.sign(signed_message(e));
  return e;
}

std::string_view to_string(RejectReason reason) noexcept {
  switch (reason) {
    case RejectReason::kBadSignature: return "bad_signature";
    case RejectReason::kMalformed: return "malformed";
    case RejectReason::kUnknownScheme: return "unknown_scheme";
    case RejectReason::kStaleRound: return "stale_round";
    case RejectReason::kDuplicate: return "duplicate";
    case RejectReason::kKeyMismatch: return "key_mismatch";
  }
  return "unknown";
}

Verdict verify_update(const UpdateEnvelope& e) noexcept {
  if (e.protocol_version != kProtocolVersion) return Verdict::reject(RejectReason::kMalformed);
  const pqc::SchemeDescriptor* scheme = pqc::find_scheme(e.scheme_id);
  if (scheme == nullptr) return Verdict::reject(RejectReason::kUnknownScheme);
  if (e.public_key.size() != scheme->public_key_len || e.signature.empty() ||
      e.signature.size() > scheme->signature_len_max ||
      (scheme->fixed_signature_len && e.signature.size() != scheme->signature_len_max)) {
    return Verdict::reject(RejectReason::kMalformed);
  }
  try {
    const Bytes message = signed_message(e);
    if (!pqc::verify(e.scheme_id, e.public_key, message, e.signature)) {
      return Verdict::reject(RejectReason::kBadSignature);
    }
  } catch (...) {
    return Verdict::reject(RejectReason::kMalformed);
  }
  return Verdict::accept();
}

FilterReport filter_updates(std::span<const UpdateEnvelope> envelopes, std::uint64_t expected_round,
                            const KeyDirectory* pinned_keys) {
  FilterReport report;
  std::set<std::string, std::less<>> seen;
  for (const auto& e : envelopes) {
    auto reject = [&](RejectReason r) { report.rejected.emplace_back(e.device_id, r); };
    if (e.round != expected_round) {
      reject(RejectReason::kStaleRound);
      continue;
    }
    if (pinned_keys != nullptr) {
      auto it = pinned_keys->find(e.device_id);
      if (it == pinned_keys->end() || it->second != e.public_key) {
        reject(RejectReason::kKeyMismatch);
        continue;
      }
    }
    if (const Verdict v = verify_update(e); !v.accepted()) {
      reject(v.reason());
      continue;
    }
    if (!seen.insert(e.device_id).second) {
      reject(RejectReason::kDuplicate);
      continue;
    }
    report.accepted.push_back(e.device_id);
    report.accepted_params.push_back(e.params);
  }
  return report;
}

ParamVector fed_avg(std::span<const ParamVector> updates) {
  if (updates.empty()) throw AggregationError("fed_avg: no accepted updates to aggregate");
  const std::size_t dim = updates.front().size();
  // Deviations from the first update, summed left to right in extended
  // precision: k copies of v average to v exactly and huge values cannot
  // overflow the running sum.
  const auto& base = updates.front();
  std::vector<long double> dev(dim, 0.0L);
  for (const auto& u : updates) {
    if (u.size() != dim) throw DomainError("fed_avg: param vectors differ in length");
    for (std::size_t i = 0; i < dim; ++i) dev[i] += static_cast<long double>(u[i]) - base[i];
  }
  const auto k = static_cast<long double>(updates.size());
  std::vector<double> mean(dim);
  for (std::size_t i = 0; i < dim; ++i) mean[i] = static_cast<double>(base[i] + dev[i] / k);
  return ParamVector(std::move(mean));
}

void to_json(nlohmann::json& j, const UpdateEnvelope& e) {
  j = nlohmann::json{{"version", e.protocol_version},
                     {"round", e.round},
                     {"device_id", e.device_id},
                     {"scheme_id", e.scheme_id},
                     {"params", e.params.values()},
                     {"public_key", base64_encode(e.public_key)},
                     {"signature", base64_encode(e.signature)}};
}

void from_json(const nlohmann::json& j, UpdateEnvelope& e) {
  e.protocol_version = j.at("version").get<std::uint8_t>();
  e.round = j.at("round").get<std::uint64_t>();
  e.device_id = j.at("device_id").get<std::string>();
  e.scheme_id = j.at("scheme_id").get<std::string>();
  e.params = ParamVector(j.at("params").get<std::vector<double>>());
  e.public_key = base64_decode(j.at("public_key").get<std::string>());
  e.signature = base64_decode(j.at("signature").get<std::string>());
}

}  // namespace pqfl
