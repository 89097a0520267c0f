// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sntf/kernels.hpp"
#include "sntf/tensor.hpp"

namespace sntf {

/// Collection of strata: s non-negative data tensors that share every
/// dimension except the first (sample) mode.
class StratifiedDataset {
 public:
  /// Validates: at least one stratum, ndim >= 2 and equal everywhere,
  /// trailing dims equal across strata, all entries >= 0. Error messages
  /// cite the offending stratum by 1-based position.
  explicit StratifiedDataset(std::vector<DenseTensor> strata);

  std::size_t stratum_count() const noexcept { return strata_.size(); }
  const DenseTensor& stratum(std::size_t i) const;
  std::size_t ndim() const noexcept { return strata_.front().ndim(); }
  std::span<const std::size_t> trailing_dims() const noexcept {
    return trailing_;
  }
  std::size_t sample_count(std::size_t i) const;
  std::size_t total_entries() const noexcept;
  /// Sum over strata of the squared Frobenius norm.
  double total_sq_norm() const noexcept { return total_sq_norm_; }

 private:
  std::vector<DenseTensor> strata_;
  std::vector<std::size_t> trailing_;
  double total_sq_norm_ = 0.0;
};

/// All learnable factors. A value type: copy freely, mutate in the solver.
///
/// Vectors are indexed [stratum][rank][trailing axis] for strata factors,
/// [stratum][rank] for codings, [rank][trailing axis] for topics, where
/// trailing axis t corresponds to tensor axis t + 1.
struct ModelState {
  std::vector<std::vector<FactorTuple>> strata_factors;
  std::vector<std::vector<FactorVec>> codings;
  std::vector<FactorTuple> topics;

  std::size_t stratum_count() const noexcept { return codings.size(); }
  std::size_t topic_rank() const noexcept { return topics.size(); }
  std::size_t strata_rank(std::size_t i) const {
    return strata_factors.at(i).size();
  }
  std::size_t sample_count(std::size_t i) const {
    return codings.at(i).front().size();
  }
  /// Number of tensor modes n (trailing modes + the sample mode).
  std::size_t ndim() const noexcept { return topics.front().size() + 1; }
  std::vector<std::size_t> trailing_dims() const;

  /// Throws std::invalid_argument when any factor length disagrees with the
  /// dataset's dimensions or the per-stratum structure is inconsistent.
  void validate_against(const StratifiedDataset& dataset) const;
};

enum class Norm { L2, L1 };

struct EarlyStop {
  bool enabled = false;
  double rel_tol = 0.0;
  std::size_t patience = 1;
};

/// Solver configuration.
struct FitConfig {
  std::size_t topic_rank = 1;
  /// Per-stratum feature ranks: empty = 0 everywhere, a single entry is
  /// replicated across strata, otherwise one entry per stratum.
  std::vector<std::size_t> strata_ranks;
  std::size_t outer_iterations = 100;
  std::size_t strata_sweeps = 2;
  double reg_strength = 0.0;
  /// Trailing axes (0-based, in [1, ndim)) that receive the TV term when
  /// reg_strength > 0. nullopt = all trailing axes. An engaged empty list
  /// combined with reg_strength > 0 is rejected by fit().
  std::optional<std::vector<std::size_t>> regularized_axes;
  Norm normalization = Norm::L2;
  EarlyStop early_stop;
  std::uint64_t seed = 0;
  double clip_floor = std::numeric_limits<double>::epsilon();

  void validate() const;
};

/// Expands FitConfig::strata_ranks against the actual stratum count.
std::vector<std::size_t> resolve_strata_ranks(
    const std::vector<std::size_t>& ranks, std::size_t stratum_count);

/// Fresh model with every factor entry i.i.d. uniform on [0,1) from
/// per-factor substreams of config.seed. Deterministic: identical
/// (dataset shape, config) give bit-identical states.
ModelState init_model(const StratifiedDataset& dataset,
                      const FitConfig& config);

/// Sum of stratum i's rank-one feature tensors over the trailing modes;
/// all-zeros when the stratum's feature rank is 0.
DenseTensor strata_tensor(const ModelState& model, std::size_t i);

/// Model approximation of stratum i: the strata features broadcast over the
/// sample mode plus the coding-weighted topic outer products.
DenseTensor reconstruct(const ModelState& model, std::size_t i);

/// Sum over strata of the squared Frobenius distance between data and
/// reconstruction.
double objective(const ModelState& model, const StratifiedDataset& dataset,
                 std::size_t threads = 1);

/// Learnable-parameter count: codings + strata factors + topics.
std::uint64_t param_count(std::span<const std::size_t> sample_counts,
                          std::span<const std::size_t> trailing_dims,
                          std::size_t topic_rank,
                          std::span<const std::size_t> strata_ranks);

}  // namespace sntf
