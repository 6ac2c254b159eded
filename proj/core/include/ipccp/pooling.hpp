// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_POOLING_HPP_
#define IPCCP_POOLING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipccp/linalg.hpp"
#include "ipccp/newton_schulz.hpp"
#include "ipccp/sketch.hpp"

namespace ipccp {

/// Input substitution applied to every descriptor before pooling.
///   kNone:     x_n
///   kCenter:   (x_n − x̄)/√n          (bilinear feature becomes the covariance)
///   kGaussian: (x_nᵗ, 1)ᵗ/√n         (first- and second-order statistics)
enum class Preprocess { kNone, kCenter, kGaussian };

std::string_view to_string(Preprocess p) noexcept;
std::optional<Preprocess> parse_preprocess(std::string_view name) noexcept;

/// q(x) = b + x·r(x). `r_coeffs` lists r in ascending powers.
struct PolynomialSpec {
  double bias = 0.0;
  std::vector<double> r_coeffs;

  /// Split q (ascending coefficients) into bias and r.
  static PolynomialSpec from_q(std::span<const double> q_coeffs);
  /// q(x) = x^m, m ≥ 1.
  static PolynomialSpec monomial(int m);
  /// q(x) = b.
  static PolynomialSpec constant(double b);

  /// Ascending coefficients of q itself.
  std::vector<double> q_coeffs() const;
};

struct PoolingMeta {
  SketchKind kind = SketchKind::kRandomMaclaurin;
  std::uint64_t seed = 0;
  std::string op;  // "compact_bilinear", "poly_pool" or "ipccp"
  int iterations = 0;
  Preprocess preprocess = Preprocess::kNone;
};

struct PooledFeature {
  std::vector<double> data;
  PoolingMeta meta;
};

LocalFeatureSet center_features(const LocalFeatureSet& x);
LocalFeatureSet gaussian_embed(const LocalFeatureSet& x);
LocalFeatureSet apply_preprocess(const LocalFeatureSet& x, Preprocess p);

/// Σ_n U(ψ¹(x_n) ⊗ ψ²(x_n)).
PooledFeature compact_bilinear(const LocalFeatureSet& x, const SketchConfig& cfg);

/// Sketch of q(C_x):  c + Σ_{n₁} U((Ψ¹(X) W)_{:,n₁} ⊗ ψ²(x_{n₁})), with
/// W = r(S^x) and c = b · (sketch of I_d). Unbiased for ⟨q(C_x), q(C_y)⟩.
PooledFeature poly_pool(const LocalFeatureSet& x, const PolynomialSpec& spec,
                        const SketchConfig& cfg);

/// As above with W supplied by the caller (n×n), e.g. cached across seeds.
PooledFeature poly_pool(const LocalFeatureSet& x, const PolynomialSpec& spec,
                        const SketchConfig& cfg, const Matrix& weights);

/// Sketched square-root-normalized covariance: preprocess, then pool with
/// b = 0 and W = Z_k(S/tr)/√tr. Throws kZeroTrace for all-zero input.
PooledFeature ipccp(const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                    Preprocess preprocess = Preprocess::kNone);

/// Un-sketched reference √tr · Y_k(C/tr) (d′×d′). Computed both in descriptor
/// space and through the Gram path X′·W·X′ᵗ; the two must agree to 1e-10
/// relative or kNumericalMismatch is thrown.
SymmetricMatrix isqrt_cov_exact(const LocalFeatureSet& x, int k,
                                Preprocess preprocess = Preprocess::kNone);

/// q(C) evaluated exactly, the oracle for poly_pool.
SymmetricMatrix poly_of_covariance(const LocalFeatureSet& x, const PolynomialSpec& spec);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace ipccp

#endif  // IPCCP_POOLING_HPP_
