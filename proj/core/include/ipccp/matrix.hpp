// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_MATRIX_HPP_
#define IPCCP_MATRIX_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ipccp/error.hpp"

namespace ipccp {

/// Dense row-major matrix. Small and value-semantic: copies are deep, moves
/// are cheap. Element type is double for everything in the library core;
/// the complex instantiation backs a few spectral-domain helpers.
template <typename T>
class DenseMatrix {
 public:
  using value_type = T;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Row-by-row literal, e.g. {{1, 2}, {3, 4}}.
  DenseMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) {
        throw Error(ErrorCode::kDimensionMismatch, "ragged matrix literal");
      }
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<T> column(std::size_t c) const {
    std::vector<T> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void set_column(std::size_t c, std::span<const T> v) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  DenseMatrix& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(DenseMatrix a, T s) { return a *= s; }
  friend DenseMatrix operator*(T s, DenseMatrix a) { return a *= s; }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void check_same_shape(const DenseMatrix& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "shape " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                      " vs " + std::to_string(o.rows_) + "x" +
                      std::to_string(o.cols_));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = DenseMatrix<double>;

/// a * b, cache-friendly i-k-j order. Summation over k is ascending.
template <typename T>
DenseMatrix<T> multiply(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "multiply: inner dimensions " + std::to_string(a.cols()) +
                    " and " + std::to_string(b.rows()));
  }
  DenseMatrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

/// aᵗ b without materializing the transpose.
Matrix multiply_at_b(const Matrix& a, const Matrix& b);
/// a bᵗ without materializing the transpose.
Matrix multiply_a_bt(const Matrix& a, const Matrix& b);

double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

/// ‖a − b‖_F / max(‖b‖_F, tiny); the comparison used by every oracle check.
double relative_frobenius_error(const Matrix& a, const Matrix& b);

/// (a + aᵗ)/2.
Matrix symmetric_part(const Matrix& a);

}  // namespace ipccp

#endif  // IPCCP_MATRIX_HPP_
