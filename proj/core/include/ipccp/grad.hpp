// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_GRAD_HPP_
#define IPCCP_GRAD_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ipccp/detail/pipeline.hpp"
#include "ipccp/pooling.hpp"

namespace ipccp {

enum class Pipeline { kIpccp, kCompactBilinear };

/// Everything one forward evaluation needs to be pulled back: the input, the
/// sketch config and every primal intermediate (Gram, all Newton–Schulz
/// iterates, the sketched matrices and weights). Sketch parameters are
/// constants of the tape and receive no gradient.
class Tape {
 public:
  Pipeline pipeline() const noexcept { return pipeline_; }
  const Matrix& input() const noexcept { return input_; }
  const SketchConfig& config() const noexcept { return cfg_; }
  int iterations() const noexcept { return k_; }
  Preprocess preprocess() const noexcept { return preprocess_; }
  const detail::ForwardRecord& record() const noexcept { return rec_; }
  const std::vector<double>& output() const noexcept { return output_; }

  /// Re-runs the forward pass from the stored input.
  std::vector<double> replay() const;

  /// Number of doubles held by the tape (complex entries count twice).
  std::size_t retained_values() const noexcept;

 private:
  friend struct TapeBuilder;
  Tape(Pipeline pipeline, Matrix input, SketchConfig cfg, int k, Preprocess preprocess)
      : pipeline_(pipeline),
        input_(std::move(input)),
        cfg_(std::move(cfg)),
        k_(k),
        preprocess_(preprocess) {}

  Pipeline pipeline_;
  Matrix input_;
  SketchConfig cfg_;
  int k_;
  Preprocess preprocess_;
  detail::ForwardRecord rec_;
  std::vector<double> output_;
};

struct TapedFeature {
  PooledFeature feature;
  Tape tape;
};

/// ipccp with a tape; the feature is bit-identical to ipccp().
TapedFeature forward_with_tape(const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                               Preprocess preprocess = Preprocess::kNone);

/// Plain compact bilinear pooling of the preprocessed input, with a tape.
TapedFeature forward_compact_with_tape(const LocalFeatureSet& x, const SketchConfig& cfg,
                                       Preprocess preprocess = Preprocess::kNone);

/// ∂⟨upstream, φ(X)⟩/∂X as a d×n matrix. Throws kTapeMismatch when the
/// upstream length is not D.
Matrix vjp(const Tape& tape, std::span<const double> upstream);

// Individual pullbacks, exposed so each stage can be checked on its own.

/// S = XᵗX:  dX = X(dS + dSᵗ).
Matrix gram_pullback(const Matrix& features, const Matrix& d_gram);

/// A = S / tr(S):  dS = dA/tr − (⟨dA, S⟩/tr²)·I.
Matrix trace_normalize_pullback(const Matrix& s, const Matrix& d_a);

/// Reverse sweep through the coupled iteration; returns dA given the adjoints
/// of the final iterates.
Matrix ns_pullback(const NsHistory& history, const Matrix& d_y_final, const Matrix& d_z_final);

/// Adjoint of the input substitution; `d_features` is d′×n.
Matrix preprocess_pullback(Preprocess preprocess, const Matrix& d_features, std::size_t d);

/// A feature map with its reverse-mode derivative, for finite-difference checks.
struct DifferentiableFeature {
  std::function<std::vector<double>(const Matrix&)> evaluate;
  std::function<Matrix(const Matrix&, std::span<const double>)> pullback;
};

DifferentiableFeature ipccp_feature(SketchConfig cfg, int k, Preprocess preprocess);
DifferentiableFeature compact_feature(SketchConfig cfg, Preprocess preprocess);
/// x ↦ ψ¹(x_column) (real part for tensor sketch): linear in X.
DifferentiableFeature projection_feature(SketchConfig cfg, std::size_t column);

/// For `probes` random unit directions u and random upstream v, compares
/// ⟨v, (f(X+εu) − f(X−εu))/(2ε)⟩ with ⟨pullback(X, v), u⟩ and returns the
/// worst relative discrepancy.
double finite_diff_check(const DifferentiableFeature& f, const Matrix& x, double eps,
                         int probes, std::uint64_t seed = 0);

}  // namespace ipccp

#endif  // IPCCP_GRAD_HPP_
