// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

// Shared forward pass for the pooling operators and the gradient tape. Not
// part of the public API.

#ifndef IPCCP_DETAIL_PIPELINE_HPP_
#define IPCCP_DETAIL_PIPELINE_HPP_

#include <optional>
#include <vector>

#include "ipccp/linalg.hpp"
#include "ipccp/newton_schulz.hpp"
#include "ipccp/sketch.hpp"

namespace ipccp {

enum class Preprocess;

namespace detail {

/// Primal intermediates of one forward evaluation.
struct ForwardRecord {
  Matrix features;   // X′ after preprocessing (d′×n)
  Matrix gram;       // S = X′ᵗX′
  double trace = 0;  // tr(S)
  NsHistory ns;      // Y_i, Z_i for i = 0..k
  Matrix weights;    // W = Z_k/√tr (or I for the plain bilinear path)
  std::optional<SketchedMatrix> psi1;
  std::optional<SketchedMatrix> psi2;
  std::optional<SketchedMatrix> mixed;  // Ψ¹·W
};

/// Σ_{n} U((Ψ¹(X) W)_{:,n} ⊗ ψ²(x_n)); fills the sketch fields of `rec`.
std::vector<double> weighted_pair_sum(const Matrix& features, const SketchConfig& cfg,
                                      const Matrix& weights, ForwardRecord* rec);

std::vector<double> ipccp_forward(const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                                  Preprocess preprocess, ForwardRecord* rec);

}  // namespace detail
}  // namespace ipccp

#endif  // IPCCP_DETAIL_PIPELINE_HPP_
