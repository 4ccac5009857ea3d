#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ringnet/error.hpp"

namespace ringnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

/// Row-major dense array of doubles. Most of the library works with rank-2
/// arrays; vectors are stored as 1 x n rows.
class DenseArray {
 public:
  DenseArray() = default;

  explicit DenseArray(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  DenseArray(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw DimensionError("DenseArray: shape " + shape_string(shape_) + " does not match " +
                           std::to_string(data_.size()) + " values");
    }
  }

  static DenseArray zeros(std::size_t rows, std::size_t cols) { return DenseArray({rows, cols}); }

  static DenseArray row(std::span<const double> values) {
    return DenseArray({1, values.size()}, std::vector<double>(values.begin(), values.end()));
  }

  static DenseArray row(std::initializer_list<double> values) {
    return DenseArray({1, values.size()}, std::vector<double>(values));
  }

  static DenseArray scalar(double v) { return DenseArray({1, 1}, std::vector<double>{v}); }

  static DenseArray identity(std::size_t n) {
    DenseArray out({n, n});
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const { return rank() == 0 ? 1 : shape_[0]; }
  std::size_t cols() const { return rank() < 2 ? 1 : shape_[1]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  double item() const {
    if (data_.size() != 1) throw DimensionError("DenseArray::item on array of shape " + shape_string(shape_));
    return data_[0];
  }

  DenseArray reshaped(Shape shape) const& {
    DenseArray out = *this;
    return std::move(out).reshaped(std::move(shape));
  }
  DenseArray reshaped(Shape shape) && {
    if (shape_size(shape) != data_.size()) {
      throw DimensionError("reshape " + shape_string(shape_) + " -> " + shape_string(shape));
    }
    shape_ = std::move(shape);
    return std::move(*this);
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  DenseArray& operator+=(const DenseArray& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  DenseArray& operator-=(const DenseArray& other) {
    require_same_shape(other, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }

  DenseArray& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend DenseArray operator+(DenseArray a, const DenseArray& b) { return a += b; }
  friend DenseArray operator-(DenseArray a, const DenseArray& b) { return a -= b; }
  friend DenseArray operator*(DenseArray a, double s) { return a *= s; }
  friend DenseArray operator*(double s, DenseArray a) { return a *= s; }

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

  void require_same_shape(const DenseArray& other, const char* what) const {
    if (shape_ != other.shape_) {
      throw DimensionError(std::string(what) + ": shape " + shape_string(shape_) + " vs " +
                           shape_string(other.shape_));
    }
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline double max_abs_difference(const DenseArray& a, const DenseArray& b) {
  a.require_same_shape(b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ringnet
