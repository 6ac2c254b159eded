// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/sketch.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>

#include "ipccp/rng.hpp"

namespace ipccp {

namespace {

// Stream ids for the counter-based generator, one per parameter role.
constexpr std::uint64_t kStreamBucket1 = 1;
constexpr std::uint64_t kStreamSign1 = 2;
constexpr std::uint64_t kStreamBucket2 = 3;
constexpr std::uint64_t kStreamSign2 = 4;
constexpr std::uint64_t kStreamW1 = 5;
constexpr std::uint64_t kStreamW2 = 6;

constexpr double kImaginaryResidue = 1e-8;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::uint64_t mix_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(v));
  return mix(h, bits);
}

CountSketchParams generate_count_sketch(std::size_t d, std::size_t output_dim,
                                        std::uint64_t seed, std::uint64_t bucket_stream,
                                        std::uint64_t sign_stream) {
  const CounterRng buckets(seed, bucket_stream);
  const CounterRng signs(seed, sign_stream);
  CountSketchParams p;
  p.bucket.resize(d);
  p.sign.resize(d);
  // output_dim is a power of two, so masking the low bits is exactly uniform.
  const std::uint64_t mask = output_dim - 1;
  for (std::size_t a = 0; a < d; ++a) {
    p.bucket[a] = static_cast<std::uint32_t>(buckets.bits(a) & mask);
    p.sign[a] = signs.sign(a);
  }
  return p;
}

Matrix generate_signs(std::size_t d, std::size_t output_dim, std::uint64_t seed,
                      std::uint64_t stream) {
  const CounterRng rng(seed, stream);
  Matrix w(output_dim, d);
  for (std::size_t j = 0; j < output_dim; ++j)
    for (std::size_t a = 0; a < d; ++a) w(j, a) = rng.sign(j * d + a);
  return w;
}

void check_count_sketch(const CountSketchParams& p, std::size_t d, std::size_t output_dim) {
  if (p.bucket.size() != d || p.sign.size() != d) {
    throw Error(ErrorCode::kBadDimension, "count-sketch parameter lists differ in length");
  }
  for (std::size_t a = 0; a < d; ++a) {
    if (p.bucket[a] >= output_dim) {
      throw Error(ErrorCode::kBadDimension, "bucket index out of range");
    }
    if (p.sign[a] != 1.0 && p.sign[a] != -1.0) {
      throw Error(ErrorCode::kBadDimension, "count-sketch signs must be +1 or -1");
    }
  }
}

}  // namespace

std::string_view to_string(SketchKind kind) noexcept {
  return kind == SketchKind::kTensorSketch ? "ts" : "rm";
}

struct SketchConfig::State {
  SketchKind kind;
  std::size_t d = 0;
  std::size_t output_dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t fingerprint = 0;
  CountSketchParams cs[2];
  Matrix w[2];
  std::optional<FftPlan> plan;

  std::once_flag identity_once;
  std::vector<double> identity;

  void finalize() {
    std::uint64_t h = mix(mix(mix(0x5157, static_cast<std::uint64_t>(kind)), d), output_dim);
    if (kind == SketchKind::kTensorSketch) {
      plan.emplace(output_dim);
      for (const auto& p : cs) {
        for (std::size_t a = 0; a < d; ++a) {
          h = mix(h, p.bucket[a]);
          h = mix_double(h, p.sign[a]);
        }
      }
    } else {
      for (const auto& m : w)
        for (double v : m.values()) h = mix_double(h, v);
    }
    fingerprint = h;
  }
};

SketchConfig SketchConfig::make(SketchKind kind, std::size_t d, std::size_t output_dim,
                                std::uint64_t seed) {
  if (d == 0 || output_dim == 0) {
    throw Error(ErrorCode::kBadDimension, "sketch dimensions must be positive");
  }
  auto state = std::make_shared<State>();
  state->kind = kind;
  state->d = d;
  state->output_dim = output_dim;
  state->seed = seed;
  if (kind == SketchKind::kTensorSketch) {
    if (!is_power_of_two(output_dim)) {
      throw Error(ErrorCode::kBadDimension,
                  "tensor sketch needs a power-of-two D, got " + std::to_string(output_dim));
    }
    state->cs[0] = generate_count_sketch(d, output_dim, seed, kStreamBucket1, kStreamSign1);
    state->cs[1] = generate_count_sketch(d, output_dim, seed, kStreamBucket2, kStreamSign2);
  } else {
    state->w[0] = generate_signs(d, output_dim, seed, kStreamW1);
    state->w[1] = generate_signs(d, output_dim, seed, kStreamW2);
  }
  state->finalize();
  return SketchConfig(std::move(state));
}

SketchConfig SketchConfig::tensor_sketch(std::size_t output_dim, CountSketchParams first,
                                         CountSketchParams second) {
  const std::size_t d = first.bucket.size();
  if (d == 0 || output_dim == 0 || !is_power_of_two(output_dim)) {
    throw Error(ErrorCode::kBadDimension, "tensor sketch needs d >= 1 and power-of-two D");
  }
  check_count_sketch(first, d, output_dim);
  check_count_sketch(second, d, output_dim);
  auto state = std::make_shared<State>();
  state->kind = SketchKind::kTensorSketch;
  state->d = d;
  state->output_dim = output_dim;
  state->cs[0] = std::move(first);
  state->cs[1] = std::move(second);
  state->finalize();
  return SketchConfig(std::move(state));
}

SketchConfig SketchConfig::random_maclaurin(Matrix first, Matrix second) {
  if (first.rows() == 0 || first.cols() == 0 || first.rows() != second.rows() ||
      first.cols() != second.cols()) {
    throw Error(ErrorCode::kBadDimension, "projection matrices must share a nonzero shape");
  }
  auto state = std::make_shared<State>();
  state->kind = SketchKind::kRandomMaclaurin;
  state->d = first.cols();
  state->output_dim = first.rows();
  state->w[0] = std::move(first);
  state->w[1] = std::move(second);
  state->finalize();
  return SketchConfig(std::move(state));
}

SketchKind SketchConfig::kind() const noexcept { return state_->kind; }
std::size_t SketchConfig::input_dim() const noexcept { return state_->d; }
std::size_t SketchConfig::output_dim() const noexcept { return state_->output_dim; }
std::uint64_t SketchConfig::seed() const noexcept { return state_->seed; }
std::uint64_t SketchConfig::fingerprint() const noexcept { return state_->fingerprint; }

const CountSketchParams& SketchConfig::count_sketch(Projection p) const {
  if (state_->kind != SketchKind::kTensorSketch) {
    throw Error(ErrorCode::kConfigMismatch, "count-sketch parameters requested from RM config");
  }
  return state_->cs[p == Projection::kFirst ? 0 : 1];
}

const Matrix& SketchConfig::projection_matrix(Projection p) const {
  if (state_->kind != SketchKind::kRandomMaclaurin) {
    throw Error(ErrorCode::kConfigMismatch, "projection matrix requested from TS config");
  }
  return state_->w[p == Projection::kFirst ? 0 : 1];
}

const FftPlan& SketchConfig::fft() const {
  if (!state_->plan) {
    throw Error(ErrorCode::kConfigMismatch, "FFT plan requested from RM config");
  }
  return *state_->plan;
}

std::span<const double> SketchConfig::identity_feature() const {
  State& s = *state_;
  std::call_once(s.identity_once, [this, &s] {
    std::vector<double> acc(s.output_dim, 0.0);
    std::vector<double> e(s.d, 0.0);
    for (std::size_t i = 0; i < s.d; ++i) {
      e[i] = 1.0;
      const auto a = project(*this, Projection::kFirst, e);
      const auto b = project(*this, Projection::kSecond, e);
      const auto f = pair_feature(*this, a, b);
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += f[j];
      e[i] = 0.0;
    }
    s.identity = std::move(acc);
  });
  return s.identity;
}

SketchedMatrix::SketchedMatrix(Projection origin, std::uint64_t fingerprint, std::size_t dim,
                               std::size_t count, bool spectral)
    : origin_(origin), fingerprint_(fingerprint), dim_(dim), count_(count), spectral_(spectral) {
  if (spectral) {
    spectral_data_.assign(dim * count, Complex{});
  } else {
    real_.assign(dim * count, 0.0);
  }
}

SketchedVector SketchedMatrix::column(std::size_t j) const {
  if (spectral_) {
    auto c = spectral_column(j);
    return SketchedVector(origin_, fingerprint_, std::vector<Complex>(c.begin(), c.end()));
  }
  auto c = real_column(j);
  return SketchedVector(origin_, fingerprint_, std::vector<double>(c.begin(), c.end()));
}

SketchedMatrix SketchedMatrix::times(const Matrix& w) const {
  if (w.rows() != count_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weights have " + std::to_string(w.rows()) + " rows for " +
                    std::to_string(count_) + " sketched columns");
  }
  SketchedMatrix out(origin_, fingerprint_, dim_, w.cols(), spectral_);
  // Row blocks keep the source panel in cache; each entry still accumulates
  // over n in ascending order.
  constexpr std::size_t kBlock = 256;
  for (std::size_t j0 = 0; j0 < dim_; j0 += kBlock) {
    const std::size_t j1 = std::min(dim_, j0 + kBlock);
    for (std::size_t m = 0; m < w.cols(); ++m) {
      for (std::size_t n = 0; n < count_; ++n) {
        const double wnm = w(n, m);
        if (spectral_) {
          Complex* dst = out.spectral_data_.data() + m * dim_;
          const Complex* src = spectral_data_.data() + n * dim_;
          for (std::size_t j = j0; j < j1; ++j) dst[j] += src[j] * wnm;
        } else {
          double* dst = out.real_.data() + m * dim_;
          const double* src = real_.data() + n * dim_;
          for (std::size_t j = j0; j < j1; ++j) dst[j] += src[j] * wnm;
        }
      }
    }
  }
  return out;
}

SketchedVector SketchedMatrix::times(std::span<const double> v) const {
  Matrix w(count_, 1);
  if (v.size() != count_) {
    throw Error(ErrorCode::kDimensionMismatch, "vector length differs from sketched column count");
  }
  for (std::size_t n = 0; n < count_; ++n) w(n, 0) = v[n];
  return times(w).column(0);
}

namespace {

void project_into(const SketchConfig& cfg, Projection i, std::span<const double> x,
                  std::span<double> real_out, std::span<Complex> spectral_out) {
  if (cfg.kind() == SketchKind::kTensorSketch) {
    const auto& p = cfg.count_sketch(i);
    for (auto& v : spectral_out) v = Complex{};
    for (std::size_t a = 0; a < x.size(); ++a) spectral_out[p.bucket[a]] += p.sign[a] * x[a];
    cfg.fft().forward(spectral_out);
  } else {
    const Matrix& w = cfg.projection_matrix(i);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      auto row = w.row(j);
      double s = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) s += row[a] * x[a];
      real_out[j] = s;
    }
  }
}

void check_projection_input(const SketchConfig& cfg, std::size_t d) {
  if (d != cfg.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "descriptor dimension " + std::to_string(d) + " vs sketch input dimension " +
                    std::to_string(cfg.input_dim()));
  }
}

void check_pair(const SketchConfig& cfg, Projection a_origin, std::uint64_t a_fp,
                Projection b_origin, std::uint64_t b_fp, std::size_t a_dim, std::size_t b_dim) {
  if (a_origin != Projection::kFirst || b_origin != Projection::kSecond) {
    throw Error(ErrorCode::kConfigMismatch, "pair expects (psi1, psi2) sketches in that order");
  }
  if (a_fp != cfg.fingerprint() || b_fp != cfg.fingerprint()) {
    throw Error(ErrorCode::kConfigMismatch, "sketches were produced by a different config");
  }
  if (a_dim != cfg.output_dim() || b_dim != cfg.output_dim()) {
    throw Error(ErrorCode::kConfigMismatch, "sketch length differs from D");
  }
}

// Inverse transform of a spectral accumulator; `scale` bounds every output
// entry's magnitude and sets the tolerance on the discarded imaginary part.
std::vector<double> real_inverse(const SketchConfig& cfg, std::vector<Complex>& acc,
                                 double scale) {
  cfg.fft().inverse(acc);
  std::vector<double> out(acc.size());
  double worst = 0.0;
  for (std::size_t t = 0; t < acc.size(); ++t) {
    out[t] = acc[t].real();
    worst = std::max(worst, std::abs(acc[t].imag()));
  }
  if (worst > kImaginaryResidue * scale) {
    throw Error(ErrorCode::kNumericalMismatch,
                "imaginary residue " + std::to_string(worst) + " after inverse transform");
  }
  return out;
}

}  // namespace

SketchedVector project(const SketchConfig& cfg, Projection i, std::span<const double> x) {
  check_projection_input(cfg, x.size());
  const std::size_t dim = cfg.output_dim();
  if (cfg.kind() == SketchKind::kTensorSketch) {
    std::vector<Complex> out(dim);
    project_into(cfg, i, x, {}, out);
    return SketchedVector(i, cfg.fingerprint(), std::move(out));
  }
  std::vector<double> out(dim);
  project_into(cfg, i, x, out, {});
  return SketchedVector(i, cfg.fingerprint(), std::move(out));
}

SketchedMatrix project_all(const SketchConfig& cfg, Projection i, const Matrix& x) {
  check_projection_input(cfg, x.rows());
  const bool spectral = cfg.kind() == SketchKind::kTensorSketch;
  SketchedMatrix out(i, cfg.fingerprint(), cfg.output_dim(), x.cols(), spectral);
  std::vector<double> col(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t a = 0; a < x.rows(); ++a) col[a] = x(a, j);
    if (spectral) {
      project_into(cfg, i, col, {}, out.spectral_column(j));
    } else {
      project_into(cfg, i, col, out.real_column(j), {});
    }
  }
  return out;
}

SketchedMatrix project_all(const SketchConfig& cfg, Projection i, const LocalFeatureSet& x) {
  return project_all(cfg, i, x.matrix());
}

std::vector<double> pair_feature(const SketchConfig& cfg, const SketchedVector& a,
                                 const SketchedVector& b) {
  check_pair(cfg, a.origin(), a.fingerprint(), b.origin(), b.fingerprint(), a.size(), b.size());
  const std::size_t dim = cfg.output_dim();
  if (cfg.kind() == SketchKind::kTensorSketch) {
    std::vector<Complex> acc(dim);
    double scale = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      acc[j] = a.spectral()[j] * b.spectral()[j];
      scale += std::abs(acc[j]);
    }
    return real_inverse(cfg, acc, scale / static_cast<double>(dim));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j) out[j] = a.real()[j] * b.real()[j] * inv_sqrt;
  return out;
}

std::vector<double> pair_feature_sum(const SketchConfig& cfg, const SketchedMatrix& a,
                                     const SketchedMatrix& b) {
  check_pair(cfg, a.origin(), a.fingerprint(), b.origin(), b.fingerprint(), a.dim(), b.dim());
  if (a.count() != b.count()) {
    throw Error(ErrorCode::kDimensionMismatch, "sketched matrices differ in column count");
  }
  const std::size_t dim = cfg.output_dim();
  if (cfg.kind() == SketchKind::kTensorSketch) {
    std::vector<Complex> acc(dim);
    double scale = 0.0;
    for (std::size_t n = 0; n < a.count(); ++n) {
      auto ac = a.spectral_column(n);
      auto bc = b.spectral_column(n);
      for (std::size_t j = 0; j < dim; ++j) {
        const Complex p = ac[j] * bc[j];
        acc[j] += p;
        scale += std::abs(p);
      }
    }
    return real_inverse(cfg, acc, scale / static_cast<double>(dim));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> out(dim, 0.0);
  for (std::size_t n = 0; n < a.count(); ++n) {
    auto ac = a.real_column(n);
    auto bc = b.real_column(n);
    for (std::size_t j = 0; j < dim; ++j) out[j] += ac[j] * bc[j];
  }
  for (auto& v : out) v *= inv_sqrt;
  return out;
}

}  // namespace ipccp
