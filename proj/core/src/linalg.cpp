// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ipccp {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr int kMaxJacobiSweeps = 100;
constexpr double kJacobiTolerance = 1e-12;
constexpr double kPsdTolerance = 1e-10;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Rotation in the (p, q) plane zeroing a(p, q); updates a and accumulates v.
void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t m = a.rows();

  for (std::size_t k = 0; k < m; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (std::size_t k = 0; k < m; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

LocalFeatureSet::LocalFeatureSet(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "feature set needs d >= 1 and n >= 1");
  }
  if (!all_finite(data_)) {
    throw Error(ErrorCode::kInvalidArgument, "feature set contains non-finite values");
  }
}

SymmetricMatrix::SymmetricMatrix(Matrix data) : data_(std::move(data)) {
  if (!data_.square()) {
    throw Error(ErrorCode::kNotSymmetric, "matrix is not square");
  }
  for (std::size_t i = 0; i < data_.rows(); ++i) {
    for (std::size_t j = i + 1; j < data_.cols(); ++j) {
      const double a = data_(i, j);
      const double b = data_(j, i);
      if (!(std::abs(a - b) <= kSymmetryTolerance * std::max(1.0, std::abs(a)))) {
        throw Error(ErrorCode::kNotSymmetric,
                    "entries (" + std::to_string(i) + "," + std::to_string(j) +
                        ") differ beyond tolerance");
      }
    }
  }
}

SymmetricMatrix SymmetricMatrix::symmetrize(const Matrix& data) {
  return SymmetricMatrix(symmetric_part(data));
}

SymmetricMatrix gram(const LocalFeatureSet& x) {
  const Matrix& m = x.matrix();
  const std::size_t n = x.count();
  Matrix s(n, n);
  // Upper triangle only, then mirror: S is exactly symmetric.
  for (std::size_t a = 0; a < m.rows(); ++a) {
    auto row = m.row(a);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = row[i];
      auto srow = s.row(i);
      for (std::size_t j = i; j < n; ++j) srow[j] += xi * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  return SymmetricMatrix(std::move(s));
}

SymmetricMatrix covariance_feature(const LocalFeatureSet& x) {
  const Matrix& m = x.matrix();
  const std::size_t d = x.dim();
  Matrix c(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    auto ri = m.row(i);
    for (std::size_t j = i; j < d; ++j) {
      auto rj = m.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < m.cols(); ++k) s += ri[k] * rj[k];
      c(i, j) = s;
      c(j, i) = s;
    }
  }
  return SymmetricMatrix(std::move(c));
}

EigenDecomposition sym_eig(const SymmetricMatrix& sym) {
  Matrix a = sym.matrix();
  const std::size_t m = a.rows();
  Matrix v = Matrix::identity(m);
  const double scale = frobenius_norm(a);

  bool converged = false;
  for (int sweep = 0; sweep <= kMaxJacobiSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= kJacobiTolerance * scale) {
      converged = true;
      break;
    }
    if (sweep == kMaxJacobiSweeps) break;
    for (std::size_t p = 0; p + 1 < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) jacobi_rotate(a, v, p, q);
  }
  if (!converged) {
    throw Error(ErrorCode::kNonConvergence,
                "Jacobi sweeps exhausted on order " + std::to_string(m));
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(m);
  out.vectors = Matrix(m, m);
  for (std::size_t c = 0; c < m; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < m; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

double spectral_norm(const SymmetricMatrix& a) {
  if (a.order() == 0) return 0.0;
  const auto eig = sym_eig(a);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

SymmetricMatrix matrix_sqrt_exact(const SymmetricMatrix& a) {
  const auto eig = sym_eig(a);
  const std::size_t m = a.order();
  if (m == 0) return a;
  const double norm2 = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  const double smallest = eig.values.back();
  if (smallest < -kPsdTolerance * norm2) {
    throw Error(ErrorCode::kNotPsd,
                "minimum eigenvalue " + std::to_string(smallest) + " below tolerance");
  }
  // Eigenvalues at rounding level are zero in exact arithmetic; their square
  // roots (~√ε) would otherwise dominate the error for singular inputs.
  const double noise = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * norm2;
  std::vector<double> roots(m);
  for (std::size_t i = 0; i < m; ++i) roots[i] = eig.values[i] > noise ? std::sqrt(eig.values[i]) : 0.0;

  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        s += eig.vectors(i, k) * roots[k] * eig.vectors(j, k);
      }
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return SymmetricMatrix(std::move(out));
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "frobenius_inner: shapes differ");
  }
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return s;
}

double frobenius_inner(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return frobenius_inner(a.matrix(), b.matrix());
}

SymmetricMatrix poly_eval_matrix(std::span<const double> coeffs, const SymmetricMatrix& a) {
  const std::size_t m = a.order();
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw Error(ErrorCode::kInvalidArgument, "non-finite coefficient");
  }
  if (coeffs.empty()) return SymmetricMatrix(Matrix(m, m));

  Matrix acc = Matrix::identity(m) * coeffs.back();
  for (std::size_t j = coeffs.size() - 1; j-- > 0;) {
    acc = multiply(acc, a.matrix());
    for (std::size_t i = 0; i < m; ++i) acc(i, i) += coeffs[j];
  }
  return SymmetricMatrix::symmetrize(acc);
}

}  // namespace ipccp
