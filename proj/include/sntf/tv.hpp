// SPDX-License-Identifier: MIT
#pragma once

#include <span>
#include <vector>

#include "sntf/model.hpp"

namespace sntf {

/// Total-variation seminorm: sum of absolute consecutive differences.
/// Zero for constant (and single-entry) vectors.
double tv_seminorm(std::span<const double> h);

/// Subgradient of the TV seminorm with sign(0) = 0. Entries lie in
/// {-2,-1,0,1,2}. Requires length >= 2.
std::vector<double> tv_subgradient(std::span<const double> h);

/// Entrywise positive/negative split of a subgradient vector. At most one
/// part is nonzero per index and positive_part - negative_part == g.
struct TvSplit {
  std::vector<double> positive_part;
  std::vector<double> negative_part;
};

TvSplit tv_split(std::span<const double> g);

/// Topic update with the TV terms: lambda * negative part added to the
/// numerator, lambda * positive part to the denominator. lambda = 0
/// reproduces update_topics_mode exactly (same code path).
void update_topics_mode_regularized(ModelState& model,
                                    const StratifiedDataset& dataset,
                                    std::size_t axis, double lambda,
                                    double clip_floor,
                                    std::size_t threads = 1);

/// Normalizes h in place to unit norm and returns the scale. A zero vector
/// is first clipped to clip_floor (degenerate path).
double normalize_topic(std::span<double> h, Norm norm, double clip_floor);

/// Normalizes every topic's `axis` factor and multiplies the scale into the
/// matching coding vectors across all strata, leaving reconstructions
/// unchanged.
void normalize_topics_mode(ModelState& model, std::size_t axis, Norm norm,
                           double clip_floor);

}  // namespace sntf
