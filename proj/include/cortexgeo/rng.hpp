#pragma once

#include <cstdint>

namespace cortexgeo {

// Counter-based random numbers: every draw is a pure function of
// (seed, counter, stream), so parallel consumers get reproducible values
// regardless of evaluation order or thread count.

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

inline std::uint64_t hash_seed(std::uint64_t a, std::uint64_t b) {
  return mix64(a + 0x9e3779b97f4a7c15ULL * (b + 1));
}

inline std::uint64_t hash_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return hash_seed(hash_seed(a, b), c);
}

inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter,
                                  std::uint64_t stream) {
  return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + counter * 0x9e3779b97f4a7c15ULL +
               stream * 0xd1342543de82ef95ULL);
}

// Uniform double in [0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter,
                              std::uint64_t stream) {
  return static_cast<double>(counter_bits(seed, counter, stream) >> 11) * 0x1.0p-53;
}

}  // namespace cortexgeo
