// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/ndarray.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "asp/error.hpp"

namespace asp {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

NdArray::NdArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

NdArray::NdArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("NdArray: shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

NdArray NdArray::scalar(double value) { return NdArray(Shape{}, std::vector<double>{value}); }

NdArray NdArray::vector(std::initializer_list<double> values) {
  return NdArray(Shape{values.size()}, std::vector<double>(values));
}

NdArray NdArray::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return NdArray(Shape{rows, cols}, std::vector<double>(values));
}

std::size_t NdArray::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("NdArray: axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

std::span<double> NdArray::row(std::size_t r) {
  const std::size_t w = shape_.back();
  return {data_.data() + r * w, w};
}

std::span<const double> NdArray::row(std::size_t r) const {
  const std::size_t w = shape_.back();
  return {data_.data() + r * w, w};
}

double NdArray::item() const {
  if (data_.size() != 1) {
    throw ShapeError("NdArray::item on array of shape " + shape_string(shape_));
  }
  return data_[0];
}

NdArray NdArray::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("NdArray::reshaped: " + shape_string(shape_) + " -> " + shape_string(shape));
  }
  return NdArray(std::move(shape), data_);
}

void NdArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool NdArray::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace asp
