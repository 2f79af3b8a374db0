#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pqfl {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteSpan data);
Digest hmac_sha256(ByteSpan key, ByteSpan data);

std::string to_hex(ByteSpan data);
std::string base64_encode(ByteSpan data);
/// Throws DomainError on malformed input.
Bytes base64_decode(std::string_view text);

inline ByteSpan as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// SplitMix64 finalizer. Used to derive independent, counter-based random streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic seed for a (seed, stream, counter) triple.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t counter = 0) noexcept {
  return mix64(mix64(seed ^ mix64(stream)) + counter);
}

}  // namespace pqfl
