// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sntf {

/// Multi-index addressing one entry of an n-mode tensor. Entries are
/// zero-based. Algorithms that pin a mode to the "zeroth index" convention
/// never store a sentinel entry; they simply omit that mode's weight.
struct MultiIndex {
  std::vector<std::size_t> entries;
};

/// Product of shape entries with overflow detection.
/// Throws std::invalid_argument on empty shape, zero dims, or overflow.
std::size_t checked_shape_product(std::span<const std::size_t> shape);

/// Dense n-mode tensor: explicit shape plus a flat row-major value buffer
/// (last index fastest). The carrier for data tensors and reconstructions.
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit DenseTensor(std::vector<std::size_t> shape);

  /// Takes ownership of a value buffer; values.size() must equal the shape
  /// product.
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }

  double at(const MultiIndex& idx) const;
  double& at(const MultiIndex& idx);

  bool same_shape(const DenseTensor& other) const noexcept;
  bool non_negative() const noexcept;
  double max_value() const noexcept;
  double sq_norm() const noexcept;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

/// Row-major flat offset of a multi-index. Throws std::invalid_argument on
/// rank mismatch and std::out_of_range when an entry exceeds its mode.
std::size_t flat_index(std::span<const std::size_t> shape,
                       const MultiIndex& idx);

/// Odometer increment with the last entry fastest. Returns false once the
/// index wraps past the end (idx is reset to all zeros).
bool next_index(std::span<const std::size_t> shape, MultiIndex& idx);

}  // namespace sntf
