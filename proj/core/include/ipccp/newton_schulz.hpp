// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_NEWTON_SCHULZ_HPP_
#define IPCCP_NEWTON_SCHULZ_HPP_

#include <vector>

#include "ipccp/linalg.hpp"
#include "ipccp/matrix.hpp"

namespace ipccp {

inline constexpr int kDefaultNsIterations = 5;
inline constexpr int kMaxNsIterations = 50;

/// Coupled iterates after k steps of
///   Y ← ½ Y (3I − Z Y),  Z ← ½ (3I − Z Y) Z,  from Y₀ = A, Z₀ = I.
/// Y_k → A^{1/2}, Z_k → A^{-1/2}, and Y_k = A·Z_k at every step.
struct NsState {
  Matrix y;
  Matrix z;
  int k = 0;
  double trace0 = 1.0;  // trace of the input before normalization
};

/// Every iterate from step 0 to step k, kept for reverse-mode replay.
struct NsHistory {
  std::vector<Matrix> y;  // k + 1 entries
  std::vector<Matrix> z;  // k + 1 entries
};

struct NsOptions {
  // Verify ‖A − I‖₂ ≤ 1 with the eigensolver before iterating.
  bool check_precondition = false;
};

/// Runs exactly k steps on A (1 ≤ k ≤ 50). Throws kDivergence if ‖Y‖_F grows
/// past 1e6·‖A‖_F or Z drifts from symmetric by more than 1e-8 relative.
NsState ns_iterate(const SymmetricMatrix& a, int k, NsOptions options = {});

/// Same recurrence; returns the full iterate history.
NsHistory ns_iterate_history(const SymmetricMatrix& a, int k, NsOptions options = {});

/// Polynomial weights r(S) whose pair-weighted sketch approximates C^{1/2}:
/// A = S / tr(S), weights = Z_k(A) / √tr(S).
struct SqrtWeights {
  Matrix weights;
  double trace0 = 0.0;
};

struct SqrtWeightOptions {
  // Verify S is PSD (kNotPsd otherwise) before normalizing.
  bool validate_psd = false;
};

/// Throws kZeroTrace when tr(S) ≤ 1e-300.
SqrtWeights sqrt_weights(const SymmetricMatrix& s, int k, SqrtWeightOptions options = {});

/// Lower bound on trace accepted before a Gram matrix is treated as all-zero.
inline constexpr double kZeroTraceThreshold = 1e-300;

}  // namespace ipccp

#endif  // IPCCP_NEWTON_SCHULZ_HPP_
