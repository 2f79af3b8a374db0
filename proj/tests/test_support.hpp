#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pqfl/envelope.hpp"

namespace pqfl::testing {

/// Same generator as tests/oracles/canonical_golden.py: SplitMix64 outputs,
/// top 53 bits mapped to [-1, 1).
inline std::vector<double> splitmix_params(std::uint64_t seed, std::size_t n) {
  std::vector<double> out;
  std::uint64_t state = seed;
  for (std::size_t i = 0; i < n; ++i) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    out.push_back(static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  }
  return out;
}

inline ParamVector random_params(std::mt19937_64& rng, std::size_t n, double scale = 10.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return ParamVector(std::move(v));
}

inline std::string random_device_id(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 24), ch('a', 'z');
  std::string s(static_cast<std::size_t>(len(rng)), 'x');
  for (auto& c : s) c = static_cast<char>(ch(rng));
  return s;
}

}  // namespace pqfl::testing
