// SPDX-License-Identifier: MIT
#include "sntf/synth.hpp"

#include <stdexcept>
#include <string>

#include "sntf/rng.hpp"

namespace sntf {

namespace {

FactorVec planted_vector(std::size_t len, double density,
                         std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  FactorVec v(len);
  if (density >= 1.0) {
    for (double& e : v) e = rng.next_unit();
  } else {
    for (double& e : v) {
      const bool keep = rng.next_unit() < density;
      const double value = rng.next_unit();
      e = keep ? value : 0.0;
    }
  }
  return v;
}

}  // namespace

PlantedInstance generate_planted(const PlantedSpec& spec) {
  if (spec.sample_counts.empty()) {
    throw std::invalid_argument("planted spec needs at least one stratum");
  }
  if (spec.trailing_dims.empty()) {
    throw std::invalid_argument("planted spec needs trailing dims");
  }
  if (spec.topic_rank == 0) {
    throw std::invalid_argument("planted topic rank must be >= 1");
  }
  if (!(spec.density > 0.0) || spec.density > 1.0) {
    throw std::invalid_argument("factor density must lie in (0, 1]");
  }
  if (spec.noise_amplitude < 0.0) {
    throw std::invalid_argument("noise amplitude must be >= 0");
  }
  for (std::size_t d : spec.sample_counts) {
    if (d == 0) throw std::invalid_argument("sample counts must be >= 1");
  }
  for (std::size_t d : spec.trailing_dims) {
    if (d == 0) throw std::invalid_argument("trailing dims must be >= 1");
  }
  const std::size_t s = spec.sample_counts.size();
  const auto ranks = resolve_strata_ranks(spec.strata_ranks, s);

  ModelState truth;
  truth.strata_factors.resize(s);
  truth.codings.resize(s);
  truth.topics.resize(spec.topic_rank);
  for (std::size_t i = 0; i < s; ++i) {
    truth.strata_factors[i].resize(ranks[i]);
    for (std::size_t j = 0; j < ranks[i]; ++j) {
      truth.strata_factors[i][j].resize(spec.trailing_dims.size());
      for (std::size_t k = 0; k < spec.trailing_dims.size(); ++k) {
        truth.strata_factors[i][j][k] = planted_vector(
            spec.trailing_dims[k], spec.density,
            substream_seed(spec.seed, kStreamPlantedStrata, i + 1, j + 1,
                           k + 1));
      }
    }
    truth.codings[i].resize(spec.topic_rank);
    for (std::size_t j = 0; j < spec.topic_rank; ++j) {
      truth.codings[i][j] = planted_vector(
          spec.sample_counts[i], spec.density,
          substream_seed(spec.seed, kStreamPlantedCoding, i + 1, j + 1));
    }
  }
  for (std::size_t j = 0; j < spec.topic_rank; ++j) {
    truth.topics[j].resize(spec.trailing_dims.size());
    for (std::size_t k = 0; k < spec.trailing_dims.size(); ++k) {
      truth.topics[j][k] = planted_vector(
          spec.trailing_dims[k], spec.density,
          substream_seed(spec.seed, kStreamPlantedTopic, 0, j + 1, k + 1));
    }
  }

  std::vector<DenseTensor> strata;
  strata.reserve(s);
  for (std::size_t i = 0; i < s; ++i) {
    DenseTensor data = reconstruct(truth, i);
    if (spec.noise_amplitude > 0.0) {
      Rng rng(substream_seed(spec.seed, kStreamPlantedNoise, i + 1));
      for (double& v : data.values()) {
        v += spec.noise_amplitude * rng.next_unit();
      }
    }
    strata.push_back(std::move(data));
  }
  return PlantedInstance{StratifiedDataset(std::move(strata)),
                         std::move(truth)};
}

DenseTensor salt_and_pepper(const DenseTensor& x, double p,
                            std::uint64_t seed) {
  if (!(p >= 0.0) || p > 0.5) {
    throw std::invalid_argument("corruption probability must lie in [0, 0.5]");
  }
  for (double v : x.values()) {
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument(
          "salt_and_pepper input entries must lie in [0, 1]");
    }
  }
  DenseTensor out = x;
  Rng rng(substream_seed(seed, kStreamSaltPepper));
  for (double& v : out.values()) {
    const double u = rng.next_unit();
    if (u < p) {
      v = 0.0;
    } else if (u < 2.0 * p) {
      v = 1.0;
    }
  }
  return out;
}

DenseTensor apply_block_watermark(const DenseTensor& x,
                                  std::span<const IndexRange> region,
                                  double value) {
  if (region.size() != x.ndim()) {
    throw std::invalid_argument("watermark region needs one range per mode");
  }
  for (std::size_t a = 0; a < region.size(); ++a) {
    if (region[a].lo > region[a].hi || region[a].hi > x.dim(a)) {
      throw std::invalid_argument("watermark range on axis " +
                                  std::to_string(a) + " is out of bounds");
    }
  }
  DenseTensor out = x;
  for (const auto& r : region) {
    if (r.lo == r.hi) return out;  // empty region, nothing to mark
  }

  MultiIndex idx;
  idx.entries.resize(x.ndim());
  for (std::size_t a = 0; a < x.ndim(); ++a) idx.entries[a] = region[a].lo;
  for (;;) {
    double& v = out.at(idx);
    if (v < value) v = value;
    // Odometer over the region, last axis fastest.
    std::size_t a = x.ndim();
    for (; a-- > 0;) {
      if (++idx.entries[a] < region[a].hi) break;
      idx.entries[a] = region[a].lo;
      if (a == 0) return out;
    }
  }
}

}  // namespace sntf
