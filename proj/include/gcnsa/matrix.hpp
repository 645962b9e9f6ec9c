#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "gcnsa/errors.hpp"
#include "gcnsa/rng.hpp"

namespace gcnsa {

// Dense row-major matrix. double for gradient checks, float for training.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, T(0)) {}
  Matrix(int rows, int cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != size_t(rows) * cols)
      throw shape_error("Matrix: data length " + std::to_string(data_.size()) + " != " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix ones(int r, int c) {
    Matrix m(r, c);
    std::fill(m.data_.begin(), m.data_.end(), T(1));
    return m;
  }
  static Matrix full(int r, int c, T v) {
    Matrix m(r, c);
    std::fill(m.data_.begin(), m.data_.end(), v);
    return m;
  }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  T operator()(int r, int c) const { return data_[size_t(r) * cols_ + c]; }
  T* row(int r) { return data_.data() + size_t(r) * cols_; }
  const T* row(int r) const { return data_.data() + size_t(r) * cols_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  using EigenMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstEigenMap =
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  EigenMap map() { return EigenMap(data_.data(), rows_, cols_); }
  ConstEigenMap map() const { return ConstEigenMap(data_.data(), rows_, cols_); }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

template <typename To, typename From>
Matrix<To> convert(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<To>(m.data()[i]);
  return out;
}

// C = A * B. GEMM itself is delegated to Eigen; everything layered on top
// (tape, backward rules) is local code.
template <typename T>
Matrix<T> matmul_values(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows())
    throw shape_error("matmul: inner dimensions disagree, " + a.shape_str() + " * " + b.shape_str());
  Matrix<T> c(a.rows(), b.cols());
  c.map().noalias() = a.map() * b.map();
  return c;
}

template <typename T>
Matrix<T> transpose_values(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

template <typename T>
void fill_uniform(Matrix<T>& m, Rng& rng, double lo, double hi) {
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(lo, hi));
}

}  // namespace gcnsa
