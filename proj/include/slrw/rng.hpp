#pragma once

#include <cstdint>

namespace slrw {

/// Identifies a single draw of the walk sampler. The mapping
/// (seed, sample, step) -> uniform is a pure function, so any draw can be
/// reproduced in isolation and sampling parallelizes without shared state.
struct StreamKey {
  std::uint64_t experiment_seed = 0;
  std::uint64_t sample_index = 0;
  std::uint64_t step_index = 0;
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: hashes the key (plus a purpose tag used to
/// decouple e.g. forward and backward increment streams) into 64 bits.
inline std::uint64_t counter_bits(const StreamKey& key, std::uint64_t tag = 0) {
  std::uint64_t h = detail::mix64(key.experiment_seed ^ 0x5bd1e995u);
  h = detail::mix64(h ^ detail::mix64(tag));
  h = detail::mix64(h ^ detail::mix64(key.sample_index));
  h = detail::mix64(h ^ detail::mix64(key.step_index));
  return h;
}

/// Uniform in [0, 1) with 53 random bits.
inline double counter_uniform(const StreamKey& key, std::uint64_t tag = 0) {
  return static_cast<double>(counter_bits(key, tag) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two decorrelated taps of the same key.
inline double counter_normal(const StreamKey& key, std::uint64_t tag = 0);

}  // namespace slrw

#include <cmath>

namespace slrw {

inline double counter_normal(const StreamKey& key, std::uint64_t tag) {
  double u1 = static_cast<double>(counter_bits(key, tag ^ 0xa11ce5ULL) >> 11) * 0x1.0p-53;
  double u2 = static_cast<double>(counter_bits(key, tag ^ 0xb0b5ULL) >> 11) * 0x1.0p-53;
  if (u1 <= 0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace slrw
