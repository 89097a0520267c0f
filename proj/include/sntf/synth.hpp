// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sntf/model.hpp"

namespace sntf {

/// Recipe for a planted instance: a random ground-truth model plus the
/// dataset it generates, optionally with additive uniform noise.
struct PlantedSpec {
  std::vector<std::size_t> sample_counts;  // one per stratum
  std::vector<std::size_t> trailing_dims;
  std::size_t topic_rank = 1;
  std::vector<std::size_t> strata_ranks;  // resolved like FitConfig
  /// Factor distribution: 1.0 = dense uniform [0,1); below 1.0 each entry is
  /// kept with probability `density` and zeroed otherwise.
  double density = 1.0;
  /// Additive per-entry noise drawn uniform from [0, noise_amplitude].
  double noise_amplitude = 0.0;
  std::uint64_t seed = 0;
};

struct PlantedInstance {
  StratifiedDataset dataset;
  ModelState ground_truth;
};

PlantedInstance generate_planted(const PlantedSpec& spec);

/// Sets each entry to 0 with probability p and to 1 with probability p,
/// independently. Requires p in [0, 0.5] and entries in [0, 1].
DenseTensor salt_and_pepper(const DenseTensor& x, double p,
                            std::uint64_t seed);

/// Half-open index range [lo, hi); empty when lo == hi.
struct IndexRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

/// Raises entries inside the per-mode region to at least `value`
/// (max-combine); entries outside are untouched.
DenseTensor apply_block_watermark(const DenseTensor& x,
                                  std::span<const IndexRange> region,
                                  double value);

}  // namespace sntf
