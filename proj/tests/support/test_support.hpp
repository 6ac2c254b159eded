// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

// Random instance generators and brute-force oracles shared by the unit and
// acceptance suites. Nothing here calls into the code paths it is used to
// check, apart from the plain Matrix container.

#ifndef IPCCP_TESTS_TEST_SUPPORT_HPP_
#define IPCCP_TESTS_TEST_SUPPORT_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "ipccp/matrix.hpp"

namespace ipccp::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = dist(gen);
  return m;
}

inline Matrix random_symmetric(std::size_t m, std::uint64_t seed) {
  Matrix a = random_matrix(m, m, seed);
  Matrix s(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

/// Brute-force triple loop.
inline Matrix loop_multiply(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Matrix loop_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// A PSD matrix GᵗG.
inline Matrix random_psd(std::size_t m, std::uint64_t seed) {
  const Matrix g = random_matrix(m, m, seed);
  return loop_multiply(loop_transpose(g), g);
}

/// Columns orthonormalized by modified Gram–Schmidt (rows ≥ cols).
inline Matrix orthonormal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix q = random_matrix(rows, cols, seed);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rows; ++r) dot += q(r, j) * q(r, p);
      for (std::size_t r = 0; r < rows; ++r) q(r, j) -= dot * q(r, p);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm += q(r, j) * q(r, j);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < rows; ++r) q(r, j) /= norm;
  }
  return q;
}

/// d×n descriptors (d ≤ n) with singular values spread evenly in [lo, hi],
/// so cond(C) = (hi/lo)².
inline Matrix conditioned_features(std::size_t d, std::size_t n, double lo, double hi,
                                   std::uint64_t seed) {
  const Matrix u = orthonormal_columns(d, d, seed);
  const Matrix v = orthonormal_columns(n, d, seed + 7777);
  Matrix x(d, n);
  for (std::size_t k = 0; k < d; ++k) {
    const double sigma = d == 1 ? hi : lo + (hi - lo) * static_cast<double>(k) / (d - 1);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t j = 0; j < n; ++j) x(a, j) += u(a, k) * sigma * v(j, k);
  }
  return x;
}

/// Σ_j c_j A^j by explicit repeated multiplication.
inline Matrix explicit_poly(const std::vector<double>& coeffs, const Matrix& a) {
  const std::size_t m = a.rows();
  Matrix out(m, m);
  Matrix power = Matrix::identity(m);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += coeffs[j] * power.values()[i];
    power = loop_multiply(power, a);
  }
  return out;
}

/// O(N²) DFT with the same sign convention as the library.
inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& v,
                                                   bool inverse = false) {
  const std::size_t n = v.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> s{};
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j * t % n) /
                           static_cast<double>(n);
      s += v[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[j] = inverse ? s / static_cast<double>(n) : s;
  }
  return out;
}

/// Scalar Newton–Schulz recurrence on a ∈ ℝ: returns (y_k, z_k).
inline std::pair<double, double> scalar_ns(double a, int k) {
  double y = a;
  double z = 1.0;
  for (int i = 0; i < k; ++i) {
    const double t = 3.0 - z * y;
    const double y_next = 0.5 * y * t;
    const double z_next = 0.5 * t * z;
    y = y_next;
    z = z_next;
  }
  return {y, z};
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    diff += d * d;
    ref += b.values()[i] * b.values()[i];
  }
  return ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
}

/// Mean and standard error of a sample.
struct Sample {
  double mean = 0.0;
  double se = 0.0;
};

inline Sample summarize(const std::vector<double>& v) {
  Sample s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return s;
}

}  // namespace ipccp::testing

#endif  // IPCCP_TESTS_TEST_SUPPORT_HPP_
