// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>

#include "sntf/model.hpp"

namespace sntf {

// The three multiplicative update rules. Each takes a fresh reconstruction
// snapshot internally, floors numerator and denominator at clip_floor before
// dividing, and updates all ranks of the touched factor group simultaneously
// from that snapshot. Non-negative state stays non-negative.

/// Updates stratum i's feature vectors along `axis` (0-based trailing axis,
/// 1 <= axis < ndim). No-op when the stratum's feature rank is 0.
void update_strata_mode(ModelState& model, const StratifiedDataset& dataset,
                        std::size_t stratum, std::size_t axis,
                        double clip_floor);

/// Updates stratum i's coding vectors for every topic rank.
void update_codings(ModelState& model, const StratifiedDataset& dataset,
                    std::size_t stratum, double clip_floor);

/// Updates every topic's `axis` factor. Numerator and denominator accumulate
/// across all strata before the ratio is taken; per-stratum partials may be
/// computed on `threads` workers and are summed in ascending stratum order,
/// so results are bit-reproducible.
void update_topics_mode(ModelState& model, const StratifiedDataset& dataset,
                        std::size_t axis, double clip_floor,
                        std::size_t threads = 1);

namespace detail {

// Topic update core shared by the plain and TV-regularized variants;
// lambda = 0 skips the TV terms entirely so both paths are bit-compatible.
void update_topics_core(ModelState& model, const StratifiedDataset& dataset,
                        std::size_t axis, double lambda, double clip_floor,
                        std::size_t threads);

}  // namespace detail

}  // namespace sntf
