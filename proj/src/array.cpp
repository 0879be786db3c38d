// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/array.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace fovr {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Array::Array(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("Array: shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Array::Array(Shape shape, std::initializer_list<double> values)
    : Array(std::move(shape), std::vector<double>(values)) {}

Array Array::full(Shape shape, double value) {
  Array a(std::move(shape));
  std::fill(a.data_.begin(), a.data_.end(), value);
  return a;
}

Array Array::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Array(Shape{n}, std::move(values));
}

std::size_t Array::rows() const {
  if (shape_.empty()) return 1;
  return data_.size() / shape_.back();
}

std::size_t Array::cols() const { return shape_.empty() ? 1 : shape_.back(); }

double Array::item() const {
  if (data_.size() != 1) throw ShapeError("Array::item on array of shape " + shape_string(shape_));
  return data_[0];
}

bool Array::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Array::check_finite(const char* where) const {
  if (!all_finite()) throw std::domain_error(std::string("non-finite value in ") + where);
}

void require_same_shape(const Array& a, const Array& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

}  // namespace fovr
