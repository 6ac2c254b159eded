// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/grad.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace ipccp {
namespace {

using testing::loop_multiply;
using testing::loop_transpose;
using testing::random_matrix;

constexpr SketchKind kKinds[] = {SketchKind::kTensorSketch, SketchKind::kRandomMaclaurin};

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  const Matrix m = random_matrix(n, 1, seed);
  return {m.values().begin(), m.values().end()};
}

TEST(Tape, ForwardMatchesIpccpBitForBit) {
  for (auto kind : kKinds) {
    for (auto pre : {Preprocess::kNone, Preprocess::kCenter}) {
      const auto cfg = SketchConfig::make(kind, 5, 32, 3);
      const LocalFeatureSet x(random_matrix(5, 6, 4));
      const auto taped = forward_with_tape(x, cfg, 4, pre);
      EXPECT_EQ(taped.feature.data, ipccp(x, cfg, 4, pre).data);
      EXPECT_EQ(taped.tape.replay(), taped.feature.data);
      EXPECT_EQ(taped.tape.output(), taped.feature.data);
    }
  }
}

TEST(Tape, CompactForwardMatchesCompactBilinear) {
  for (auto kind : kKinds) {
    const auto cfg = SketchConfig::make(kind, 4, 16, 5);
    const LocalFeatureSet x(random_matrix(4, 3, 6));
    const auto taped = forward_compact_with_tape(x, cfg);
    EXPECT_EQ(taped.feature.data, compact_bilinear(x, cfg).data);
    EXPECT_EQ(taped.tape.replay(), taped.feature.data);
  }
}

TEST(Tape, RetainedValuesGrowLinearlyInIterations) {
  const auto cfg = SketchConfig::make(SketchKind::kRandomMaclaurin, 4, 16, 1);
  const LocalFeatureSet x(random_matrix(4, 6, 2));
  std::vector<std::size_t> sizes;
  for (int k = 1; k <= 4; ++k) sizes.push_back(forward_with_tape(x, cfg, k).tape.retained_values());
  // Each extra step stores one Y and one Z (n×n each).
  for (std::size_t i = 1; i < sizes.size(); ++i) EXPECT_EQ(sizes[i] - sizes[i - 1], 2u * 36u);
}

TEST(Vjp, ZeroUpstreamGivesZeroGradient) {
  for (auto kind : kKinds) {
    const auto cfg = SketchConfig::make(kind, 4, 16, 7);
    const auto taped = forward_with_tape(LocalFeatureSet(random_matrix(4, 5, 8)), cfg, 3);
    const std::vector<double> zero(16);
    EXPECT_EQ(max_abs(vjp(taped.tape, zero)), 0.0);
  }
}

TEST(Vjp, UpstreamLengthMismatch) {
  const auto cfg = SketchConfig::make(SketchKind::kTensorSketch, 4, 16, 7);
  const auto taped = forward_with_tape(LocalFeatureSet(random_matrix(4, 5, 8)), cfg, 3);
  const std::vector<double> wrong(8);
  try {
    vjp(taped.tape, wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTapeMismatch);
  }
}

// ∂/∂x_n ⟨g, Σ_m (W₁x_m)∘(W₂x_m)⟩/√D = (W₁ᵗ(g∘W₂x_n) + W₂ᵗ(g∘W₁x_n))/√D.
TEST(Vjp, CompactMaclaurinClosedForm) {
  const std::size_t d = 4, n = 3, big_d = 12;
  const auto cfg = SketchConfig::make(SketchKind::kRandomMaclaurin, d, big_d, 9);
  const Matrix x = random_matrix(d, n, 10);
  const auto g = random_vector(big_d, 11);
  const Matrix& w1 = cfg.projection_matrix(Projection::kFirst);
  const Matrix& w2 = cfg.projection_matrix(Projection::kSecond);
  const Matrix p1 = loop_multiply(w1, x);
  const Matrix p2 = loop_multiply(w2, x);
  Matrix expected(d, n);
  const double s = 1.0 / std::sqrt(double(big_d));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t j = 0; j < big_d; ++j)
        expected(a, c) += s * g[j] * (w1(j, a) * p2(j, c) + w2(j, a) * p1(j, c));
  const auto taped = forward_compact_with_tape(LocalFeatureSet(x), cfg);
  EXPECT_LE(max_abs(vjp(taped.tape, g) - expected), 1e-10);
}

// ⟨g, a ⊛ b⟩ with a, b count sketches: ∂/∂a_j = Σ_t g[(j+t) mod D] b_t.
TEST(Vjp, CompactTensorSketchClosedForm) {
  const std::size_t d = 5, n = 4, big_d = 8;
  const auto cfg = SketchConfig::make(SketchKind::kTensorSketch, d, big_d, 12);
  const Matrix x = random_matrix(d, n, 13);
  const auto g = random_vector(big_d, 14);
  const auto& c1 = cfg.count_sketch(Projection::kFirst);
  const auto& c2 = cfg.count_sketch(Projection::kSecond);
  Matrix expected(d, n);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<double> a(big_d), b(big_d);
    for (std::size_t i = 0; i < d; ++i) {
      a[c1.bucket[i]] += c1.sign[i] * x(i, c);
      b[c2.bucket[i]] += c2.sign[i] * x(i, c);
    }
    std::vector<double> da(big_d), db(big_d);
    for (std::size_t j = 0; j < big_d; ++j)
      for (std::size_t t = 0; t < big_d; ++t) {
        da[j] += g[(j + t) % big_d] * b[t];
        db[t] += g[(j + t) % big_d] * a[j];
      }
    for (std::size_t i = 0; i < d; ++i)
      expected(i, c) = c1.sign[i] * da[c1.bucket[i]] + c2.sign[i] * db[c2.bucket[i]];
  }
  const auto taped = forward_compact_with_tape(LocalFeatureSet(x), cfg);
  EXPECT_LE(max_abs(vjp(taped.tape, g) - expected), 1e-10);
}

TEST(Vjp, LinearInUpstream) {
  for (auto kind : kKinds) {
    const auto cfg = SketchConfig::make(kind, 6, 32, 15);
    const auto taped = forward_with_tape(LocalFeatureSet(random_matrix(6, 5, 16)), cfg, 3,
                                         Preprocess::kCenter);
    const auto u = random_vector(32, 17);
    const auto v = random_vector(32, 18);
    std::vector<double> mix(32);
    for (std::size_t j = 0; j < 32; ++j) mix[j] = 1.5 * u[j] - 0.75 * v[j];
    const Matrix expected = vjp(taped.tape, u) * 1.5 - vjp(taped.tape, v) * 0.75;
    EXPECT_LE(max_abs(vjp(taped.tape, mix) - expected), 1e-10 * (1.0 + max_abs(expected)));
  }
}

TEST(GramPullback, SymmetrizingAdjointChangesNothing) {
  const Matrix x = random_matrix(5, 6, 19);
  const auto w = sqrt_weights(gram(LocalFeatureSet(x)), 3);
  const auto history = ns_iterate_history(
      SymmetricMatrix::symmetrize(gram(LocalFeatureSet(x)).matrix() * (1.0 / w.trace0)), 3);
  const Matrix d_a = ns_pullback(history, Matrix(6, 6), random_matrix(6, 6, 20));
  const Matrix d_s = trace_normalize_pullback(gram(LocalFeatureSet(x)).matrix(), d_a);
  const Matrix sym = (d_s + d_s.transpose()) * 0.5;
  EXPECT_LE(max_abs(gram_pullback(x, d_s) - gram_pullback(x, sym)), 1e-10);
  // And the pullback is X(dS + dSᵗ) by the triple loop.
  const Matrix expected = loop_multiply(x, d_s + loop_transpose(d_s));
  EXPECT_LE(max_abs(gram_pullback(x, d_s) - expected), 1e-12);
}

// f(S) = ⟨G, S / tr S⟩ on its own, against central differences.
TEST(TraceNormalizePullback, MatchesFiniteDifferences) {
  const Matrix s = testing::random_psd(5, 21);
  const Matrix g = random_matrix(5, 5, 22);
  const Matrix u = random_matrix(5, 5, 23);
  const auto f = [&](const Matrix& m) { return frobenius_inner(g, m * (1.0 / trace(m))); };
  const double eps = 1e-6;
  const double fd = (f(s + u * eps) - f(s - u * eps)) / (2 * eps);
  const double an = frobenius_inner(trace_normalize_pullback(s, g), u);
  EXPECT_LE(std::abs(fd - an), 1e-7 * std::max(std::abs(fd), 1.0));
  // Dropping the rank-one correction is visibly wrong.
  const double naive = frobenius_inner(g * (1.0 / trace(s)), u);
  EXPECT_GT(std::abs(fd - naive), 1e-3 * std::abs(fd));
}

TEST(NsPullback, MatchesFiniteDifferences) {
  Matrix a = testing::random_psd(4, 24);
  a *= 1.0 / trace(a);
  const Matrix gy = random_matrix(4, 4, 25);
  const Matrix gz = random_matrix(4, 4, 26);
  Matrix u = testing::random_symmetric(4, 27);
  const auto f = [&](const Matrix& m) {
    const auto st = ns_iterate(SymmetricMatrix::symmetrize(m), 5);
    return frobenius_inner(gy, st.y) + frobenius_inner(gz, st.z);
  };
  const double eps = 1e-6;
  const double fd = (f(a + u * eps) - f(a - u * eps)) / (2 * eps);
  const double an =
      frobenius_inner(ns_pullback(ns_iterate_history(SymmetricMatrix(a), 5), gy, gz), u);
  EXPECT_LE(std::abs(fd - an), 1e-6 * std::abs(fd));
}

TEST(PreprocessPullback, MatchesFiniteDifferences) {
  for (auto pre : {Preprocess::kNone, Preprocess::kCenter, Preprocess::kGaussian}) {
    const Matrix x = random_matrix(3, 4, 28);
    const std::size_t rows = pre == Preprocess::kGaussian ? 4 : 3;
    const Matrix g = random_matrix(rows, 4, 29);
    const Matrix u = random_matrix(3, 4, 30);
    const auto f = [&](const Matrix& m) {
      return frobenius_inner(g, apply_preprocess(LocalFeatureSet(m), pre).matrix());
    };
    // Preprocessing is affine, so central differences are exact up to rounding.
    const double fd = (f(x + u * 1e-3) - f(x - u * 1e-3)) / 2e-3;
    const double an = frobenius_inner(preprocess_pullback(pre, g, 3), u);
    EXPECT_NEAR(fd, an, 1e-10) << to_string(pre);
  }
}

TEST(FiniteDiff, LinearFunctionExactAtAnyStep) {
  for (auto kind : kKinds) {
    const auto f = projection_feature(SketchConfig::make(kind, 5, 16, 31), 2);
    const Matrix x = random_matrix(5, 4, 32);
    for (double eps : {1e-4, 1e-3}) EXPECT_LE(finite_diff_check(f, x, eps, 6), 1e-10) << eps;
    // Below that the difference quotient hits the fp64 rounding floor, which
    // grows like unit roundoff · |f| / ε.
    for (double eps : {1e-7, 1e-6, 1e-5}) EXPECT_LE(finite_diff_check(f, x, eps, 6), 1e-13 / eps) << eps;
  }
}

TEST(FiniteDiff, CompactBilinear) {
  for (auto kind : kKinds) {
    const auto f = compact_feature(SketchConfig::make(kind, 5, 32, 33), Preprocess::kNone);
    EXPECT_LE(finite_diff_check(f, random_matrix(5, 4, 34), 1e-5, 6), 1e-8);
  }
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  const auto f = compact_feature(SketchConfig::make(SketchKind::kTensorSketch, 2, 4, 0),
                                 Preprocess::kNone);
  EXPECT_THROW(finite_diff_check(f, random_matrix(2, 2, 0), 0.0, 1), Error);
}

TEST(FiniteDiff, FullPipeline) {
  for (auto kind : kKinds) {
    const auto f = ipccp_feature(SketchConfig::make(kind, 6, 64, 35), 3, Preprocess::kNone);
    EXPECT_LE(finite_diff_check(f, random_matrix(6, 5, 36), 1e-5, 8), 1e-6) << to_string(kind);
  }
}

}  // namespace
}  // namespace ipccp
