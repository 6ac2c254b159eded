// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/pooling.hpp"

#include <cmath>

#include "ipccp/detail/pipeline.hpp"

namespace ipccp {

namespace {

constexpr double kCrossPathTolerance = 1e-10;

void check_dim(const LocalFeatureSet& x, const SketchConfig& cfg) {
  if (x.dim() != cfg.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature dimension " + std::to_string(x.dim()) + " but sketch expects " +
                    std::to_string(cfg.input_dim()));
  }
}

}  // namespace

std::string_view to_string(Preprocess p) noexcept {
  switch (p) {
    case Preprocess::kNone: return "none";
    case Preprocess::kCenter: return "center";
    case Preprocess::kGaussian: return "gaussian";
  }
  return "none";
}

std::optional<Preprocess> parse_preprocess(std::string_view name) noexcept {
  if (name == "none") return Preprocess::kNone;
  if (name == "center") return Preprocess::kCenter;
  if (name == "gaussian") return Preprocess::kGaussian;
  return std::nullopt;
}

PolynomialSpec PolynomialSpec::from_q(std::span<const double> q) {
  PolynomialSpec s;
  if (!q.empty()) {
    s.bias = q[0];
    s.r_coeffs.assign(q.begin() + 1, q.end());
  }
  return s;
}

PolynomialSpec PolynomialSpec::monomial(int m) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "monomial degree must be >= 1");
  PolynomialSpec s;
  s.r_coeffs.assign(static_cast<std::size_t>(m), 0.0);
  s.r_coeffs.back() = 1.0;
  return s;
}

PolynomialSpec PolynomialSpec::constant(double b) {
  PolynomialSpec s;
  s.bias = b;
  return s;
}

std::vector<double> PolynomialSpec::q_coeffs() const {
  std::vector<double> q;
  q.reserve(r_coeffs.size() + 1);
  q.push_back(bias);
  q.insert(q.end(), r_coeffs.begin(), r_coeffs.end());
  return q;
}

LocalFeatureSet center_features(const LocalFeatureSet& x) {
  const Matrix& m = x.matrix();
  const std::size_t n = x.count();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix out(m.rows(), n);
  for (std::size_t a = 0; a < m.rows(); ++a) {
    auto row = m.row(a);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) out(a, j) = (row[j] - mean) * inv_sqrt_n;
  }
  return LocalFeatureSet(std::move(out));
}

LocalFeatureSet gaussian_embed(const LocalFeatureSet& x) {
  const Matrix& m = x.matrix();
  const std::size_t n = x.count();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix out(m.rows() + 1, n);
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t j = 0; j < n; ++j) out(a, j) = m(a, j) * inv_sqrt_n;
  for (std::size_t j = 0; j < n; ++j) out(m.rows(), j) = inv_sqrt_n;
  return LocalFeatureSet(std::move(out));
}

LocalFeatureSet apply_preprocess(const LocalFeatureSet& x, Preprocess p) {
  switch (p) {
    case Preprocess::kNone: return x;
    case Preprocess::kCenter: return center_features(x);
    case Preprocess::kGaussian: return gaussian_embed(x);
  }
  return x;
}

PooledFeature compact_bilinear(const LocalFeatureSet& x, const SketchConfig& cfg) {
  check_dim(x, cfg);
  const auto p1 = project_all(cfg, Projection::kFirst, x);
  const auto p2 = project_all(cfg, Projection::kSecond, x);
  PooledFeature out;
  out.data = pair_feature_sum(cfg, p1, p2);
  out.meta = {cfg.kind(), cfg.seed(), "compact_bilinear", 0, Preprocess::kNone};
  return out;
}

PooledFeature poly_pool(const LocalFeatureSet& x, const PolynomialSpec& spec,
                        const SketchConfig& cfg) {
  check_dim(x, cfg);
  const auto weights = poly_eval_matrix(spec.r_coeffs, gram(x));
  return poly_pool(x, spec, cfg, weights.matrix());
}

PooledFeature poly_pool(const LocalFeatureSet& x, const PolynomialSpec& spec,
                        const SketchConfig& cfg, const Matrix& weights) {
  check_dim(x, cfg);
  if (weights.rows() != x.count() || weights.cols() != x.count()) {
    throw Error(ErrorCode::kDimensionMismatch, "weights must be n x n");
  }
  PooledFeature out;
  out.data = detail::weighted_pair_sum(x.matrix(), cfg, weights, nullptr);
  if (spec.bias != 0.0) {
    const auto c = cfg.identity_feature();
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += spec.bias * c[j];
  }
  out.meta = {cfg.kind(), cfg.seed(), "poly_pool", 0, Preprocess::kNone};
  return out;
}

PooledFeature ipccp(const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                    Preprocess preprocess) {
  PooledFeature out;
  out.data = detail::ipccp_forward(x, cfg, k, preprocess, nullptr);
  out.meta = {cfg.kind(), cfg.seed(), "ipccp", k, preprocess};
  return out;
}

SymmetricMatrix isqrt_cov_exact(const LocalFeatureSet& x, int k, Preprocess preprocess) {
  const LocalFeatureSet xp = apply_preprocess(x, preprocess);
  const auto weights = sqrt_weights(gram(xp), k);

  // Gram path: X′ W X′ᵗ.
  const Matrix& m = xp.matrix();
  const Matrix via_gram = multiply_a_bt(multiply(m, weights.weights), m);

  // Descriptor path: √tr · Y_k(C/tr).
  const SymmetricMatrix c = covariance_feature(xp);
  const double tr = weights.trace0;
  const NsState state = ns_iterate(SymmetricMatrix(c.matrix() * (1.0 / tr)), k);
  const Matrix direct = state.y * std::sqrt(tr);

  const double err = relative_frobenius_error(via_gram, direct);
  if (!(err <= kCrossPathTolerance)) {
    throw Error(ErrorCode::kNumericalMismatch,
                "Gram and covariance paths disagree by " + std::to_string(err));
  }
  return SymmetricMatrix::symmetrize(direct);
}

SymmetricMatrix poly_of_covariance(const LocalFeatureSet& x, const PolynomialSpec& spec) {
  const auto q = spec.q_coeffs();
  return poly_eval_matrix(q, covariance_feature(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "dot: lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace ipccp
