// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace ipccp {

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "multiply_at_b: row counts differ");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix multiply_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "multiply_a_bt: column counts differ");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

double trace(const Matrix& a) {
  if (!a.square()) throw Error(ErrorCode::kDimensionMismatch, "trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  const double diff = frobenius_norm(a - b);
  const double ref = frobenius_norm(b);
  return ref > 0.0 ? diff / ref : diff;
}

Matrix symmetric_part(const Matrix& a) {
  if (!a.square()) throw Error(ErrorCode::kDimensionMismatch, "symmetric_part of non-square matrix");
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    s(i, i) = a(i, i);
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

}  // namespace ipccp
