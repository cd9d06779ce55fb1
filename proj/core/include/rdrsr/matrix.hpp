#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdrsr {

/// Dense row-major matrix of doubles. Vectors are 1 x n matrices.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> values)
      : rows(r), cols(c), a(std::move(values)) {
    if (a.size() != static_cast<size_t>(r) * c)
      throw std::invalid_argument("Matrix: data length does not match shape");
  }

  static Matrix scalar(double v) {
    Matrix m(1, 1);
    m.a[0] = v;
    return m;
  }
  static Matrix row(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Matrix(1, n, std::move(v));
  }

  int size() const { return rows * cols; }

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void zero() { std::fill(a.begin(), a.end(), 0.0); }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Thrown on shape mismatches; message names the offending op.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rdrsr
