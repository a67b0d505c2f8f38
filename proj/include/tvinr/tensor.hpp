#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvinr {

/// Dense row-major matrix of doubles. Vectors are 1×n or n×1 tensors.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative tensor extent");
  }
  Tensor(int rows, int cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != size_t(rows) * cols) throw std::invalid_argument("tensor data size mismatch");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[size_t(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(int r) { return data_.data() + size_t(r) * cols_; }
  const double* row(int r) const { return data_.data() + size_t(r) * cols_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  /// Max |a-b| over elements; shapes must match.
  static double max_abs_diff(const Tensor& a, const Tensor& b);

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

std::string shape_str(const Tensor& t);

}  // namespace tvinr
