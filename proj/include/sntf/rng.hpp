// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>

namespace sntf {

// SplitMix64 mixing step. Portable across platforms; every random quantity
// in the library flows through this so identical seeds give bit-identical
// results regardless of host.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based SplitMix64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Stream labels for per-factor substreams. Keyed substreams make the
// initialization independent of factor iteration order, and keep planted
// ground truths distinct from fit initializations at equal seeds.
inline constexpr std::uint64_t kStreamStrataFactor = 1;
inline constexpr std::uint64_t kStreamCoding = 2;
inline constexpr std::uint64_t kStreamTopic = 3;
inline constexpr std::uint64_t kStreamPlantedStrata = 4;
inline constexpr std::uint64_t kStreamPlantedCoding = 5;
inline constexpr std::uint64_t kStreamPlantedTopic = 6;
inline constexpr std::uint64_t kStreamPlantedNoise = 7;
inline constexpr std::uint64_t kStreamSaltPepper = 8;

/// Seed for the substream identified by (role, a, b, c) under a master seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t role,
                                    std::uint64_t a = 0, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(role));
  h = mix64(h ^ mix64(a));
  h = mix64(h ^ mix64(b));
  h = mix64(h ^ mix64(c));
  return h;
}

}  // namespace sntf
