// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/newton_schulz.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace ipccp {
namespace {

using testing::loop_multiply;
using testing::loop_transpose;
using testing::random_matrix;
using testing::rel_err;

SymmetricMatrix normalized_psd(std::size_t m, std::uint64_t seed) {
  Matrix a = testing::random_psd(m, seed);
  a *= 1.0 / trace(a);
  return SymmetricMatrix::symmetrize(a);
}

TEST(NewtonSchulz, IdentityIsFixedPoint) {
  for (int k : {1, 5, 20}) {
    const auto st = ns_iterate(SymmetricMatrix::identity(4), k);
    EXPECT_EQ(st.y, Matrix::identity(4));
    EXPECT_EQ(st.z, Matrix::identity(4));
    EXPECT_EQ(st.k, k);
  }
}

TEST(NewtonSchulz, ScalarRecurrence) {
  const SymmetricMatrix a(Matrix{{0.25}});
  for (int k = 1; k <= 8; ++k) {
    const auto [y, z] = testing::scalar_ns(0.25, k);
    const auto st = ns_iterate(a, k);
    EXPECT_DOUBLE_EQ(st.y(0, 0), y);
    EXPECT_DOUBLE_EQ(st.z(0, 0), z);
  }
  EXPECT_NEAR(ns_iterate(a, 50).y(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(ns_iterate(a, 50).z(0, 0), 2.0, 1e-14);
}

TEST(NewtonSchulz, ConvergesToEigenSqrt) {
  const SymmetricMatrix a = normalized_psd(8, 31);
  const Matrix exact = matrix_sqrt_exact(a).matrix();
  const auto st = ns_iterate(a, 20);
  EXPECT_LE(rel_err(st.y, exact), 1e-6);
}

// Y_k = A·Z_k for 100 random normalized PSD inputs of orders 2..32.
TEST(NewtonSchulz, CouplingIdentityProperty) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t m = 2 + seed % 31;
    const SymmetricMatrix a = normalized_psd(m, 300 + seed);
    const auto hist = ns_iterate_history(a, 20);
    for (std::size_t k = 0; k < hist.y.size(); ++k) {
      EXPECT_LE(rel_err(loop_multiply(a.matrix(), hist.z[k]), hist.y[k]), 1e-10)
          << "order " << m << " step " << k;
    }
  }
}

TEST(NewtonSchulz, YStaysSymmetric) {
  const SymmetricMatrix a = normalized_psd(10, 4);
  const auto st = ns_iterate(a, 15);
  EXPECT_LE(frobenius_norm(st.y - st.y.transpose()), 1e-10 * frobenius_norm(st.y));
}

TEST(NewtonSchulz, HistoryMatchesFinalState) {
  const SymmetricMatrix a = normalized_psd(6, 8);
  const auto hist = ns_iterate_history(a, 7);
  const auto st = ns_iterate(a, 7);
  ASSERT_EQ(hist.y.size(), 8u);
  EXPECT_EQ(hist.y.front(), a.matrix());
  EXPECT_EQ(hist.z.front(), Matrix::identity(6));
  EXPECT_EQ(hist.y.back(), st.y);
  EXPECT_EQ(hist.z.back(), st.z);
}

// Error against the eigen square root never increases after step 2 when the
// condition number is at most 100.
TEST(NewtonSchulz, MonotoneConvergenceWhenWellConditioned) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t d = 3 + seed % 6;
    const Matrix x = testing::conditioned_features(d, d + 4, 1.0, 10.0, 40 + seed);
    Matrix c = loop_multiply(x, loop_transpose(x));
    c *= 1.0 / trace(c);
    const SymmetricMatrix a = SymmetricMatrix::symmetrize(c);
    const Matrix exact = matrix_sqrt_exact(a).matrix();
    const auto hist = ns_iterate_history(a, 25);
    double prev = rel_err(hist.y[2], exact);
    for (std::size_t k = 3; k < hist.y.size(); ++k) {
      const double err = rel_err(hist.y[k], exact);
      EXPECT_LE(err, prev + 1e-14) << "seed " << seed << " k " << k;
      prev = err;
    }
  }
}

TEST(NewtonSchulz, DivergenceOutsidePrecondition) {
  try {
    // a = 5 only oscillates (y: 5, -5, 5, ...); a = 9 blows up.
    ns_iterate(SymmetricMatrix(Matrix{{9.0}}), 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
  }
}

TEST(NewtonSchulz, PreconditionCheck) {
  NsOptions opts;
  opts.check_precondition = true;
  try {
    ns_iterate(SymmetricMatrix(Matrix{{2.5, 0.0}, {0.0, 1.0}}), 3, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolated);
  }
  // Boundary: zero eigenvalue gives ||A - I|| = 1 exactly and is accepted.
  EXPECT_NO_THROW(ns_iterate(SymmetricMatrix(Matrix{{1.0, 0.0}, {0.0, 0.0}}), 3, opts));
}

TEST(NewtonSchulz, RejectsBadIterationCount) {
  EXPECT_THROW(ns_iterate(SymmetricMatrix::identity(2), 0), Error);
  EXPECT_THROW(ns_iterate(SymmetricMatrix::identity(2), kMaxNsIterations + 1), Error);
}

TEST(SqrtWeights, UnitScalar) {
  for (int k : {1, 4, 9}) {
    const auto w = sqrt_weights(SymmetricMatrix(Matrix{{1.0}}), k);
    EXPECT_DOUBLE_EQ(w.weights(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(w.trace0, 1.0);
  }
}

TEST(SqrtWeights, IdentityGramMatchesScalarRecurrence) {
  const std::size_t n = 6;
  for (int k : {1, 3, 5, 12}) {
    const auto w = sqrt_weights(SymmetricMatrix::identity(n), k);
    const double expected = testing::scalar_ns(1.0 / n, k).second / std::sqrt(double(n));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(w.weights(i, i), expected, 1e-14 * expected);
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) EXPECT_EQ(w.weights(i, j), 0.0);
    }
  }
}

TEST(SqrtWeights, PushedThroughApproximatesSqrt) {
  const Matrix x = random_matrix(8, 10, 77);
  const LocalFeatureSet fs(x);
  const auto w = sqrt_weights(gram(fs), 15);
  const Matrix approx = loop_multiply(loop_multiply(x, w.weights), loop_transpose(x));
  const Matrix exact = matrix_sqrt_exact(covariance_feature(fs)).matrix();
  EXPECT_LE(rel_err(approx, exact), 1e-4);
}

// X·(Z_k/√tr)·Xᵗ = √tr·Y′_k with Y′ run on C/tr: pure algebra.
TEST(SqrtWeights, CrossSpaceIdentity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = random_matrix(3 + seed % 5, 2 + seed % 9, 900 + seed);
    const LocalFeatureSet fs(x);
    for (int k = 1; k <= 20; ++k) {
      const auto w = sqrt_weights(gram(fs), k);
      const Matrix lhs = loop_multiply(loop_multiply(x, w.weights), loop_transpose(x));
      Matrix c = covariance_feature(fs).matrix();
      c *= 1.0 / w.trace0;
      const Matrix rhs = ns_iterate(SymmetricMatrix(c), k).y * std::sqrt(w.trace0);
      EXPECT_LE(rel_err(lhs, rhs), 1e-10) << "seed " << seed << " k " << k;
    }
  }
}

TEST(SqrtWeights, RankDeficientGram) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = random_matrix(4, 16, 60 + seed);
    const LocalFeatureSet fs(x);
    const auto w = sqrt_weights(gram(fs), 15);
    const Matrix approx = loop_multiply(loop_multiply(x, w.weights), loop_transpose(x));
    const Matrix exact = matrix_sqrt_exact(covariance_feature(fs)).matrix();
    EXPECT_LE(rel_err(approx, exact), 1e-3);
  }
}

TEST(SqrtWeights, ZeroTrace) {
  try {
    sqrt_weights(SymmetricMatrix(Matrix(3, 3)), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroTrace);
  }
}

TEST(SqrtWeights, ValidatesPsdOnRequest) {
  SqrtWeightOptions opts;
  opts.validate_psd = true;
  try {
    sqrt_weights(SymmetricMatrix(Matrix{{2.0, 0.0}, {0.0, -1.0}}), 5, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPsd);
  }
}

}  // namespace
}  // namespace ipccp
