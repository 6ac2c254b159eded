// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/newton_schulz.hpp"

#include <cmath>
#include <string>

namespace ipccp {

namespace {

constexpr double kDivergenceFactor = 1e6;
constexpr double kSymmetryDrift = 1e-8;

void check_iteration_count(int k) {
  if (k < 1 || k > kMaxNsIterations) {
    throw Error(ErrorCode::kInvalidArgument,
                "iteration count must be in [1, " + std::to_string(kMaxNsIterations) +
                    "], got " + std::to_string(k));
  }
}

void check_precondition(const SymmetricMatrix& a) {
  Matrix shifted = a.matrix() - Matrix::identity(a.order());
  const double dist = spectral_norm(SymmetricMatrix(std::move(shifted)));
  // Equality is reachable from trace normalization with zero eigenvalues and
  // is harmless: zero is a fixed point of the scalar recurrence.
  if (dist > 1.0 + 1e-12) {
    throw Error(ErrorCode::kPreconditionViolated,
                "||A - I||_2 = " + std::to_string(dist) + " exceeds 1");
  }
}

double asymmetry(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double d = m(i, j) - m(j, i);
      s += 2.0 * d * d;
    }
  return std::sqrt(s);
}

template <typename Visit>
void run(const SymmetricMatrix& a, int k, NsOptions options, Visit&& visit) {
  check_iteration_count(k);
  if (options.check_precondition) check_precondition(a);

  const std::size_t m = a.order();
  const double limit = kDivergenceFactor * frobenius_norm(a.matrix());
  Matrix y = a.matrix();
  Matrix z = Matrix::identity(m);
  visit(y, z);
  for (int step = 0; step < k; ++step) {
    Matrix t = multiply(z, y) * -1.0;
    for (std::size_t i = 0; i < m; ++i) t(i, i) += 3.0;
    Matrix y_next = multiply(y, t) * 0.5;
    Matrix z_next = multiply(t, z) * 0.5;
    y = std::move(y_next);
    z = std::move(z_next);

    const double ynorm = frobenius_norm(y);
    if (!(ynorm <= limit)) {
      throw Error(ErrorCode::kDivergence,
                  "||Y|| = " + std::to_string(ynorm) + " at step " +
                      std::to_string(step + 1) + "; is ||A - I|| <= 1?");
    }
    if (asymmetry(z) > kSymmetryDrift * frobenius_norm(z)) {
      throw Error(ErrorCode::kDivergence,
                  "Z lost symmetry at step " + std::to_string(step + 1));
    }
    visit(y, z);
  }
}

}  // namespace

NsState ns_iterate(const SymmetricMatrix& a, int k, NsOptions options) {
  NsState state;
  run(a, k, options, [&](const Matrix& y, const Matrix& z) {
    state.y = y;
    state.z = z;
  });
  state.k = k;
  return state;
}

NsHistory ns_iterate_history(const SymmetricMatrix& a, int k, NsOptions options) {
  NsHistory h;
  h.y.reserve(static_cast<std::size_t>(k) + 1);
  h.z.reserve(static_cast<std::size_t>(k) + 1);
  run(a, k, options, [&](const Matrix& y, const Matrix& z) {
    h.y.push_back(y);
    h.z.push_back(z);
  });
  return h;
}

SqrtWeights sqrt_weights(const SymmetricMatrix& s, int k, SqrtWeightOptions options) {
  check_iteration_count(k);
  const double tr = trace(s.matrix());
  if (!(tr > kZeroTraceThreshold)) {
    throw Error(ErrorCode::kZeroTrace,
                "trace of the Gram matrix is " + std::to_string(tr) +
                    "; all descriptors are zero (a single centered descriptor "
                    "always is)");
  }
  if (options.validate_psd) {
    const auto eig = sym_eig(s);
    const double norm2 = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
    if (eig.values.back() < -1e-10 * norm2) {
      throw Error(ErrorCode::kNotPsd, "Gram matrix has a negative eigenvalue");
    }
  }
  SymmetricMatrix a(s.matrix() * (1.0 / tr));
  NsState state = ns_iterate(a, k);
  SqrtWeights out;
  out.weights = std::move(state.z) * (1.0 / std::sqrt(tr));
  out.trace0 = tr;
  return out;
}

}  // namespace ipccp
