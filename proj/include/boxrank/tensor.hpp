// Copyright (c) 2026 the boxrank authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "boxrank/error.hpp"

namespace boxrank {

// Dense row-major tensor, up to 4 axes. Activations use NCHW layout.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 4)
      throw DimensionError(msg("tensor rank must be 1..4, got ",
                               shape_.size()));
    int64_t total = 1;
    for (int d : shape_) {
      if (d <= 0) throw DimensionError(msg("tensor dim must be positive, got ", d));
      total *= d;
    }
    data_.assign(static_cast<size_t>(total), T(0));
  }

  static Tensor nchw(int n, int c, int h, int w) {
    return Tensor(std::vector<int>{n, c, h, w});
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  // Same buffer, new shape; sizes must match.
  Tensor reshaped(std::vector<int> shape) const {
    Tensor t(std::move(shape));
    if (t.size() != size())
      throw DimensionError(msg("reshape size mismatch: ", size(), " vs ",
                               t.size()));
    t.data_ = data_;
    return t;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

// Debug-mode finite checks on layer outputs. Enabled by default in
// non-NDEBUG builds; tests may toggle explicitly.
bool finite_checks_enabled();
void set_finite_checks(bool on);

template <typename T>
void check_finite(const Tensor<T>& t, const char* what) {
  if (!finite_checks_enabled()) return;
  if (!t.all_finite())
    throw NumericError(msg("non-finite values in ", what));
}

}  // namespace boxrank
