// SPDX-License-Identifier: MIT
#include "sntf/tensor.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace sntf {

std::size_t checked_shape_product(std::span<const std::size_t> shape) {
  if (shape.empty()) {
    throw std::invalid_argument("tensor shape must have at least one mode");
  }
  std::size_t product = 1;
  for (std::size_t d : shape) {
    if (d == 0) {
      throw std::invalid_argument("tensor dimensions must be positive");
    }
    if (product > std::numeric_limits<std::size_t>::max() / d) {
      throw std::invalid_argument("tensor dimension product overflows");
    }
    product *= d;
  }
  return product;
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(checked_shape_product(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> shape,
                         std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != checked_shape_product(shape_)) {
    throw std::invalid_argument(
        "value count " + std::to_string(values_.size()) +
        " does not match shape product " +
        std::to_string(checked_shape_product(shape_)));
  }
}

std::size_t DenseTensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw std::invalid_argument("axis " + std::to_string(axis) +
                                " out of range for " +
                                std::to_string(shape_.size()) + " modes");
  }
  return shape_[axis];
}

double DenseTensor::at(const MultiIndex& idx) const {
  return values_[flat_index(shape_, idx)];
}

double& DenseTensor::at(const MultiIndex& idx) {
  return values_[flat_index(shape_, idx)];
}

bool DenseTensor::same_shape(const DenseTensor& other) const noexcept {
  return shape_ == other.shape_;
}

bool DenseTensor::non_negative() const noexcept {
  for (double v : values_) {
    if (v < 0.0) return false;
  }
  return true;
}

double DenseTensor::max_value() const noexcept {
  double m = 0.0;
  for (double v : values_) {
    if (v > m) m = v;
  }
  return m;
}

double DenseTensor::sq_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

std::size_t flat_index(std::span<const std::size_t> shape,
                       const MultiIndex& idx) {
  if (idx.entries.size() != shape.size()) {
    throw std::invalid_argument("multi-index addresses " +
                                std::to_string(idx.entries.size()) +
                                " modes, tensor has " +
                                std::to_string(shape.size()));
  }
  std::size_t flat = 0;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (idx.entries[a] >= shape[a]) {
      throw std::out_of_range("index " + std::to_string(idx.entries[a]) +
                              " exceeds mode of size " +
                              std::to_string(shape[a]));
    }
    flat = flat * shape[a] + idx.entries[a];
  }
  return flat;
}

bool next_index(std::span<const std::size_t> shape, MultiIndex& idx) {
  for (std::size_t a = shape.size(); a-- > 0;) {
    if (++idx.entries[a] < shape[a]) return true;
    idx.entries[a] = 0;
  }
  return false;
}

}  // namespace sntf
