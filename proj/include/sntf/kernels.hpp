// SPDX-License-Identifier: MIT
#pragma once

#include <span>
#include <vector>

#include "sntf/tensor.hpp"

namespace sntf {

/// One factor vector of a rank-one component.
using FactorVec = std::vector<double>;
/// One rank-one component: a factor vector per mode.
using FactorTuple = std::vector<FactorVec>;

/// Outer product of the given factor vectors. Result shape is
/// (f0.size(), ..., fm.size()); entry (i0,...,im) = prod_k f_k[i_k].
DenseTensor outer_product(std::span<const FactorVec> factors);

/// Elementwise sum of the outer products of each component tuple.
/// All tuples must agree mode-by-mode on vector lengths.
DenseTensor rank_one_sum(std::span<const FactorTuple> components);

/// Sum over all entries of (a - b)^2. Shapes must match.
double sq_frobenius_distance(const DenseTensor& a, const DenseTensor& b);

/// Weighted contraction of x over every axis except target_axis.
///
/// weights has one slot per axis of x. The target slot must be empty; an
/// empty slot on any other axis means that axis is summed with weight 1
/// (the update rules use this for the sample mode). Output entry k is the
/// sum of x over all remaining indices with the product of the supplied
/// weight entries, i.e. the shared kernel behind the multiplicative-update
/// numerators and denominators.
///
/// Implemented as sequential per-axis reduction (last axis first), which
/// turns the exponential multi-index sums into O(x.size()) passes.
std::vector<double> contract_leaving_mode(
    const DenseTensor& x, std::span<const std::span<const double>> weights,
    std::size_t target_axis);

/// Contraction leaving the first axis: one weight per trailing axis,
/// none may be empty. Output entry k = sum_alpha (prod weights) * x[k, alpha].
std::vector<double> contract_leaving_first(
    const DenseTensor& x, std::span<const std::span<const double>> weights);

}  // namespace sntf
