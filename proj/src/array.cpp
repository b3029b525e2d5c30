// SPDX-License-Identifier: Apache-2.0
#include "bigan/array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace bigan {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t matrix_cols(const Shape& shape) {
  if (shape.empty()) return 1;
  return shape.back();
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

ShapeError::ShapeError(const std::string& op, const Shape& a, const Shape& b)
    : std::invalid_argument("shape mismatch in " + op + ": " + shape_string(a) + " vs " +
                            shape_string(b)) {}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill), cols_(matrix_cols(shape_)) {}

Array::Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)), cols_(matrix_cols(shape_)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("array of shape " + shape_string(shape_) + " given " +
                     std::to_string(data_.size()) + " values");
  }
}

Array Array::scalar(double value) { return Array(Shape{}, value); }

Array Array::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Array(Shape{rows, cols}, fill);
}

Array Array::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Array::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Array(Shape{r, c}, std::move(data));
}

Array Array::vector(std::initializer_list<double> values) {
  return Array(Shape{values.size()}, std::vector<double>(values));
}

Array Array::vector(std::span<const double> values) {
  return Array(Shape{values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Array::rows() const {
  switch (shape_.size()) {
    case 0:
    case 1:
      return 1;
    case 2:
      return shape_[0];
    default:
      throw ShapeError("matrix view of rank-" + std::to_string(shape_.size()) + " array " +
                       shape_string(shape_));
  }
}

std::size_t Array::cols() const {
  if (shape_.size() > 2) {
    throw ShapeError("matrix view of rank-" + std::to_string(shape_.size()) + " array " +
                     shape_string(shape_));
  }
  return cols_;
}

void Array::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Array::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace bigan
