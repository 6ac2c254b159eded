// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/grad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipccp/rng.hpp"

namespace ipccp {

struct TapeBuilder {
  static Tape make(Pipeline p, const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                   Preprocess pre) {
    return Tape(p, x.matrix(), cfg, k, pre);
  }
  static detail::ForwardRecord& record(Tape& t) { return t.rec_; }
  static std::vector<double>& output(Tape& t) { return t.output_; }
};

namespace {

std::vector<double> compact_forward(const LocalFeatureSet& x, const SketchConfig& cfg,
                                    Preprocess pre, detail::ForwardRecord* rec) {
  const LocalFeatureSet xp = apply_preprocess(x, pre);
  if (xp.dim() != cfg.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "preprocessed dimension differs from sketch input");
  }
  const Matrix identity = Matrix::identity(xp.count());
  if (rec != nullptr) {
    rec->features = xp.matrix();
    rec->weights = identity;
  }
  return detail::weighted_pair_sum(xp.matrix(), cfg, identity, rec);
}

// Re Σ_j a_{j,m} b_{j,n} for every (m, n).
Matrix column_inner_products(const SketchedMatrix& a, const SketchedMatrix& b) {
  Matrix out(a.count(), b.count());
  for (std::size_t m = 0; m < a.count(); ++m) {
    for (std::size_t n = 0; n < b.count(); ++n) {
      double s = 0.0;
      if (a.is_spectral()) {
        auto ac = a.spectral_column(m);
        auto bc = b.spectral_column(n);
        for (std::size_t j = 0; j < ac.size(); ++j) {
          s += ac[j].real() * bc[j].real() - ac[j].imag() * bc[j].imag();
        }
      } else {
        auto ac = a.real_column(m);
        auto bc = b.real_column(n);
        for (std::size_t j = 0; j < ac.size(); ++j) s += ac[j] * bc[j];
      }
      out(m, n) = s;
    }
  }
  return out;
}

// Adds the transpose of ψ^i applied to each column of `adjoint` into `d_features`.
void projection_pullback(const SketchConfig& cfg, Projection i, const SketchedMatrix& adjoint,
                         Matrix& d_features) {
  const std::size_t d = d_features.rows();
  if (cfg.kind() == SketchKind::kTensorSketch) {
    const auto& cs = cfg.count_sketch(i);
    std::vector<Complex> buf(cfg.output_dim());
    for (std::size_t m = 0; m < adjoint.count(); ++m) {
      auto col = adjoint.spectral_column(m);
      std::copy(col.begin(), col.end(), buf.begin());
      // The DFT matrix is symmetric, so its transpose is the forward transform.
      cfg.fft().forward(buf);
      for (std::size_t a = 0; a < d; ++a) {
        d_features(a, m) += cs.sign[a] * buf[cs.bucket[a]].real();
      }
    }
  } else {
    const Matrix& w = cfg.projection_matrix(i);
    for (std::size_t m = 0; m < adjoint.count(); ++m) {
      auto col = adjoint.real_column(m);
      for (std::size_t j = 0; j < w.rows(); ++j) {
        auto row = w.row(j);
        const double cj = col[j];
        for (std::size_t a = 0; a < d; ++a) d_features(a, m) += row[a] * cj;
      }
    }
  }
}

}  // namespace

std::vector<double> Tape::replay() const {
  const LocalFeatureSet x(input_);
  if (pipeline_ == Pipeline::kIpccp) {
    return detail::ipccp_forward(x, cfg_, k_, preprocess_, nullptr);
  }
  return compact_forward(x, cfg_, preprocess_, nullptr);
}

std::size_t Tape::retained_values() const noexcept {
  std::size_t total = input_.size() + rec_.features.size() + rec_.gram.size() +
                      rec_.weights.size() + output_.size();
  for (const auto& m : rec_.ns.y) total += m.size();
  for (const auto& m : rec_.ns.z) total += m.size();
  for (const auto* s : {&rec_.psi1, &rec_.psi2, &rec_.mixed}) {
    if (*s) total += (*s)->dim() * (*s)->count() * ((*s)->is_spectral() ? 2 : 1);
  }
  return total;
}

TapedFeature forward_with_tape(const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                               Preprocess preprocess) {
  Tape tape = TapeBuilder::make(Pipeline::kIpccp, x, cfg, k, preprocess);
  auto out = detail::ipccp_forward(x, cfg, k, preprocess, &TapeBuilder::record(tape));
  TapeBuilder::output(tape) = out;
  PooledFeature feature{std::move(out), {cfg.kind(), cfg.seed(), "ipccp", k, preprocess}};
  return {std::move(feature), std::move(tape)};
}

TapedFeature forward_compact_with_tape(const LocalFeatureSet& x, const SketchConfig& cfg,
                                       Preprocess preprocess) {
  Tape tape = TapeBuilder::make(Pipeline::kCompactBilinear, x, cfg, 0, preprocess);
  auto out = compact_forward(x, cfg, preprocess, &TapeBuilder::record(tape));
  TapeBuilder::output(tape) = out;
  PooledFeature feature{std::move(out),
                        {cfg.kind(), cfg.seed(), "compact_bilinear", 0, preprocess}};
  return {std::move(feature), std::move(tape)};
}

Matrix gram_pullback(const Matrix& features, const Matrix& d_gram) {
  const Matrix sym = d_gram + d_gram.transpose();
  return multiply(features, sym);
}

Matrix trace_normalize_pullback(const Matrix& s, const Matrix& d_a) {
  const double tr = trace(s);
  const double coupling = frobenius_inner(d_a, s) / (tr * tr);
  Matrix ds = d_a * (1.0 / tr);
  for (std::size_t i = 0; i < ds.rows(); ++i) ds(i, i) -= coupling;
  return ds;
}

Matrix ns_pullback(const NsHistory& history, const Matrix& d_y_final, const Matrix& d_z_final) {
  const std::size_t steps = history.y.size() - 1;
  const std::size_t m = d_z_final.rows();
  Matrix dy = d_y_final;
  Matrix dz = d_z_final;
  for (std::size_t i = steps; i-- > 0;) {
    const Matrix& y = history.y[i];
    const Matrix& z = history.z[i];
    Matrix t = multiply(z, y) * -1.0;
    for (std::size_t r = 0; r < m; ++r) t(r, r) += 3.0;

    // Y' = ½ Y T,  Z' = ½ T Z,  T = 3I − Z Y.
    Matrix dt = (multiply_at_b(y, dy) + multiply_a_bt(dz, z)) * 0.5;
    Matrix dy_prev = multiply_a_bt(dy, t) * 0.5 - multiply_at_b(z, dt);
    Matrix dz_prev = multiply_at_b(t, dz) * 0.5 - multiply_a_bt(dt, y);
    dy = std::move(dy_prev);
    dz = std::move(dz_prev);
  }
  // Z₀ = I is constant; Y₀ = A.
  return dy;
}

Matrix preprocess_pullback(Preprocess preprocess, const Matrix& d_features, std::size_t d) {
  const std::size_t n = d_features.cols();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix dx(d, n);
  switch (preprocess) {
    case Preprocess::kNone:
      return d_features;
    case Preprocess::kCenter:
      for (std::size_t a = 0; a < d; ++a) {
        auto row = d_features.row(a);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) dx(a, j) = (row[j] - mean) * inv_sqrt_n;
      }
      return dx;
    case Preprocess::kGaussian:
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t j = 0; j < n; ++j) dx(a, j) = d_features(a, j) * inv_sqrt_n;
      return dx;
  }
  return dx;
}

Matrix vjp(const Tape& tape, std::span<const double> upstream) {
  const SketchConfig& cfg = tape.config();
  const std::size_t dim = cfg.output_dim();
  if (upstream.size() != dim) {
    throw Error(ErrorCode::kTapeMismatch, "upstream length " + std::to_string(upstream.size()) +
                                              " but tape output has " + std::to_string(dim));
  }
  for (double v : upstream) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite upstream");
  }
  const detail::ForwardRecord& rec = tape.record();
  const SketchedMatrix& psi1 = *rec.psi1;
  const SketchedMatrix& psi2 = *rec.psi2;
  const SketchedMatrix& mixed = *rec.mixed;
  const std::size_t n = psi1.count();
  const bool spectral = psi1.is_spectral();

  // Adjoint of the summed pair products in the sketch domain.
  std::vector<Complex> g_spec;
  std::vector<double> g_real;
  if (spectral) {
    g_spec.assign(upstream.begin(), upstream.end());
    cfg.fft().inverse(g_spec);
  } else {
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));
    g_real.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) g_real[j] = upstream[j] * inv_sqrt;
  }

  SketchedMatrix d_mixed(Projection::kFirst, cfg.fingerprint(), dim, n, spectral);
  SketchedMatrix d_psi2(Projection::kSecond, cfg.fingerprint(), dim, n, spectral);
  for (std::size_t c = 0; c < n; ++c) {
    if (spectral) {
      auto dm = d_mixed.spectral_column(c);
      auto dp = d_psi2.spectral_column(c);
      auto p2 = psi2.spectral_column(c);
      auto mx = mixed.spectral_column(c);
      for (std::size_t j = 0; j < dim; ++j) {
        dm[j] = g_spec[j] * p2[j];
        dp[j] = g_spec[j] * mx[j];
      }
    } else {
      auto dm = d_mixed.real_column(c);
      auto dp = d_psi2.real_column(c);
      auto p2 = psi2.real_column(c);
      auto mx = mixed.real_column(c);
      for (std::size_t j = 0; j < dim; ++j) {
        dm[j] = g_real[j] * p2[j];
        dp[j] = g_real[j] * mx[j];
      }
    }
  }

  // Ψ¹·W: both factors.
  const SketchedMatrix d_psi1 = d_mixed.times(rec.weights.transpose());
  Matrix d_features(rec.features.rows(), n);
  projection_pullback(cfg, Projection::kFirst, d_psi1, d_features);
  projection_pullback(cfg, Projection::kSecond, d_psi2, d_features);

  if (tape.pipeline() == Pipeline::kIpccp) {
    const Matrix d_weights = column_inner_products(psi1, d_mixed);
    const double tr = rec.trace;
    const double inv_sqrt_tr = 1.0 / std::sqrt(tr);
    const Matrix& z_final = rec.ns.z.back();
    // W = Z_k · tr^{-1/2}.
    const Matrix d_z = d_weights * inv_sqrt_tr;
    const double d_tr_from_w = -0.5 * inv_sqrt_tr / tr * frobenius_inner(d_weights, z_final);
    const Matrix d_a = ns_pullback(rec.ns, Matrix(n, n), d_z);
    Matrix d_gram = trace_normalize_pullback(rec.gram, d_a);
    for (std::size_t i = 0; i < n; ++i) d_gram(i, i) += d_tr_from_w;
    d_features += gram_pullback(rec.features, d_gram);
  }

  return preprocess_pullback(tape.preprocess(), d_features, tape.input().rows());
}

DifferentiableFeature ipccp_feature(SketchConfig cfg, int k, Preprocess preprocess) {
  DifferentiableFeature f;
  f.evaluate = [cfg, k, preprocess](const Matrix& x) {
    return ipccp(LocalFeatureSet(x), cfg, k, preprocess).data;
  };
  f.pullback = [cfg, k, preprocess](const Matrix& x, std::span<const double> v) {
    return vjp(forward_with_tape(LocalFeatureSet(x), cfg, k, preprocess).tape, v);
  };
  return f;
}

DifferentiableFeature compact_feature(SketchConfig cfg, Preprocess preprocess) {
  DifferentiableFeature f;
  f.evaluate = [cfg, preprocess](const Matrix& x) {
    return forward_compact_with_tape(LocalFeatureSet(x), cfg, preprocess).feature.data;
  };
  f.pullback = [cfg, preprocess](const Matrix& x, std::span<const double> v) {
    return vjp(forward_compact_with_tape(LocalFeatureSet(x), cfg, preprocess).tape, v);
  };
  return f;
}

DifferentiableFeature projection_feature(SketchConfig cfg, std::size_t column) {
  DifferentiableFeature f;
  f.evaluate = [cfg, column](const Matrix& x) {
    const auto s = project(cfg, Projection::kFirst, x.column(column));
    if (!s.is_spectral()) return std::vector<double>(s.real().begin(), s.real().end());
    std::vector<double> out(s.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = s.spectral()[j].real();
    return out;
  };
  f.pullback = [cfg, column](const Matrix& x, std::span<const double> v) {
    const bool spectral = cfg.kind() == SketchKind::kTensorSketch;
    SketchedMatrix adj(Projection::kFirst, cfg.fingerprint(), cfg.output_dim(), 1, spectral);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (spectral) {
        adj.spectral_column(0)[j] = v[j];
      } else {
        adj.real_column(0)[j] = v[j];
      }
    }
    Matrix single(x.rows(), 1);
    projection_pullback(cfg, Projection::kFirst, adj, single);
    Matrix dx(x.rows(), x.cols());
    for (std::size_t a = 0; a < x.rows(); ++a) dx(a, column) = single(a, 0);
    return dx;
  };
  return f;
}

double finite_diff_check(const DifferentiableFeature& f, const Matrix& x, double eps,
                         int probes, std::uint64_t seed) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be positive");
  double worst = 0.0;
  const std::size_t out_dim = f.evaluate(x).size();
  for (int p = 0; p < probes; ++p) {
    const CounterRng dir_rng(seed, 2 * static_cast<std::uint64_t>(p));
    const CounterRng up_rng(seed, 2 * static_cast<std::uint64_t>(p) + 1);
    Matrix u(x.rows(), x.cols());
    for (std::size_t i = 0; i < u.size(); ++i) u.values()[i] = dir_rng.normal(i);
    u *= 1.0 / frobenius_norm(u);
    std::vector<double> v(out_dim);
    for (std::size_t j = 0; j < out_dim; ++j) v[j] = up_rng.normal(j);

    const auto plus = f.evaluate(x + u * eps);
    const auto minus = f.evaluate(x - u * eps);
    double fd = 0.0;
    for (std::size_t j = 0; j < out_dim; ++j) fd += v[j] * (plus[j] - minus[j]);
    fd /= 2.0 * eps;
    const double analytic = frobenius_inner(f.pullback(x, v), u);

    const double denom = std::max(std::abs(fd), std::abs(analytic));
    const double rel = denom > 0.0 ? std::abs(fd - analytic) / denom : 0.0;
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace ipccp
