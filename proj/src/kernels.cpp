// SPDX-License-Identifier: MIT
#include "sntf/kernels.hpp"

#include <stdexcept>
#include <string>

namespace sntf {

namespace {

// Reduces one axis of a row-major buffer, weighted when w is non-empty.
// The inner loop runs over contiguous memory in both branches.
std::vector<double> reduce_axis(const std::vector<double>& buf,
                                const std::vector<std::size_t>& dims,
                                std::size_t axis,
                                std::span<const double> w) {
  const std::size_t len = dims[axis];
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
  const std::size_t outer = buf.size() / (len * inner);

  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = buf.data() + o * len * inner;
    double* dst = out.data() + o * inner;
    if (inner == 1) {
      double s = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        s += (w.empty() ? src[t] : src[t] * w[t]);
      }
      dst[0] = s;
    } else {
      for (std::size_t t = 0; t < len; ++t) {
        const double c = w.empty() ? 1.0 : w[t];
        const double* row = src + t * inner;
        for (std::size_t k = 0; k < inner; ++k) dst[k] += c * row[k];
      }
    }
  }
  return out;
}

}  // namespace

DenseTensor outer_product(std::span<const FactorVec> factors) {
  if (factors.empty()) {
    throw std::invalid_argument("outer_product needs at least one factor");
  }
  std::vector<std::size_t> shape;
  shape.reserve(factors.size());
  for (const auto& f : factors) {
    if (f.empty()) {
      throw std::invalid_argument("outer_product factors must be non-empty");
    }
    shape.push_back(f.size());
  }

  std::vector<double> values{1.0};
  for (const auto& f : factors) {
    std::vector<double> expanded(values.size() * f.size());
    std::size_t pos = 0;
    for (double base : values) {
      for (double entry : f) expanded[pos++] = base * entry;
    }
    values = std::move(expanded);
  }
  return DenseTensor(std::move(shape), std::move(values));
}

DenseTensor rank_one_sum(std::span<const FactorTuple> components) {
  if (components.empty()) {
    throw std::invalid_argument("rank_one_sum needs at least one component");
  }
  DenseTensor acc = outer_product(components.front());
  for (std::size_t c = 1; c < components.size(); ++c) {
    DenseTensor term = outer_product(components[c]);
    if (!term.same_shape(acc)) {
      throw std::invalid_argument(
          "rank_one_sum component " + std::to_string(c + 1) +
          " disagrees on factor lengths");
    }
    auto dst = acc.values();
    auto src = term.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  return acc;
}

double sq_frobenius_distance(const DenseTensor& a, const DenseTensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("sq_frobenius_distance: shape mismatch");
  }
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) {
    const double d = av[k] - bv[k];
    s += d * d;
  }
  return s;
}

std::vector<double> contract_leaving_mode(
    const DenseTensor& x, std::span<const std::span<const double>> weights,
    std::size_t target_axis) {
  const std::size_t n = x.ndim();
  if (target_axis >= n) {
    throw std::invalid_argument("contract target axis " +
                                std::to_string(target_axis) +
                                " out of range for " + std::to_string(n) +
                                " modes");
  }
  if (weights.size() != n) {
    throw std::invalid_argument("contract expects one weight slot per axis");
  }
  if (!weights[target_axis].empty()) {
    throw std::invalid_argument("contract target axis must have no weight");
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (a == target_axis || weights[a].empty()) continue;
    if (weights[a].size() != x.dim(a)) {
      throw std::invalid_argument(
          "weight length " + std::to_string(weights[a].size()) +
          " does not match axis " + std::to_string(a) + " of size " +
          std::to_string(x.dim(a)));
    }
  }

  std::vector<double> buf(x.values().begin(), x.values().end());
  std::vector<std::size_t> dims(x.shape());
  // Reduce original axes from last to first, skipping the target. Processing
  // high axes first keeps original axis a at position a of the shrinking
  // dims vector (only higher axes get erased before it).
  for (std::size_t a = n; a-- > 0;) {
    if (a == target_axis) continue;
    buf = reduce_axis(buf, dims, a, weights[a]);
    dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(a));
  }
  return buf;
}

std::vector<double> contract_leaving_first(
    const DenseTensor& x, std::span<const std::span<const double>> weights) {
  if (weights.size() + 1 != x.ndim()) {
    throw std::invalid_argument(
        "contract_leaving_first expects one weight per trailing axis");
  }
  for (const auto& w : weights) {
    if (w.empty()) {
      throw std::invalid_argument(
          "contract_leaving_first weights must all be supplied");
    }
  }
  std::vector<std::span<const double>> full(x.ndim());
  for (std::size_t a = 1; a < x.ndim(); ++a) full[a] = weights[a - 1];
  return contract_leaving_mode(x, full, 0);
}

}  // namespace sntf
