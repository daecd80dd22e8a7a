#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace centraprune {

// Dense row-major float64 matrix. Weight matrices are stored [d, n] with one
// neuron per column, so column helpers below run with stride cols().
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  static Matrix from_data(std::size_t rows, std::size_t cols,
                          std::vector<double> data) {
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(data);
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // Dot product of columns i and j, accumulated in fixed row order so the
  // result is independent of how callers are scheduled.
  double column_dot(std::size_t i, std::size_t j) const {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      acc += (*this)(r, i) * (*this)(r, j);
    }
    return acc;
  }

  double column_norm(std::size_t j) const {
    return std::sqrt(column_dot(j, j));
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace centraprune
