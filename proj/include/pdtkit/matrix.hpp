#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "pdtkit/errors.hpp"

namespace pdtkit {

using Vec = std::vector<double>;

// Dense row-major matrix. Small helper, not a linear algebra library;
// the codebase only needs mat-vec products and row access.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Vec apply(const Vec& x) const {
    if (x.size() != cols_) throw ShapeError("matrix-vector size mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double* w = row(r);
      double acc = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) acc += w[c] * x[c];
      y[r] = acc;
    }
    return y;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("dot size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace pdtkit
