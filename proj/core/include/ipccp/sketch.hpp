// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_SKETCH_HPP_
#define IPCCP_SKETCH_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "ipccp/fft.hpp"
#include "ipccp/linalg.hpp"
#include "ipccp/matrix.hpp"

namespace ipccp {

enum class SketchKind { kTensorSketch, kRandomMaclaurin };

std::string_view to_string(SketchKind kind) noexcept;

/// Which of the two independent projections (ψ¹ or ψ²) produced a sketch.
enum class Projection { kFirst = 1, kSecond = 2 };

/// Count-sketch parameters, bucket indices 0-based.
struct CountSketchParams {
  std::vector<std::uint32_t> bucket;
  std::vector<double> sign;  // ±1
};

/// One draw θ of the sketch randomness plus the output dimension D.
///
/// Tensor sketch holds (h₁, s₁, h₂, s₂) and requires D to be a power of two;
/// random Maclaurin holds two D×d sign matrices W₁, W₂. Immutable and cheap to
/// copy (shared state). Parameters are generated from the seed with a
/// counter-based generator, so the same (kind, d, D, seed) always produces
/// bit-identical parameters.
class SketchConfig {
 public:
  /// Throws kBadDimension for D = 0, d = 0, or a tensor-sketch D that is not a
  /// power of two.
  static SketchConfig make(SketchKind kind, std::size_t d, std::size_t output_dim,
                           std::uint64_t seed);

  /// Tensor sketch with explicit parameters (both lists of length d).
  static SketchConfig tensor_sketch(std::size_t output_dim, CountSketchParams first,
                                    CountSketchParams second);

  /// Random Maclaurin with explicit D×d projection matrices.
  static SketchConfig random_maclaurin(Matrix first, Matrix second);

  SketchKind kind() const noexcept;
  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::uint64_t seed() const noexcept;
  /// Hash of every parameter; sketches remember it to detect mixing configs.
  std::uint64_t fingerprint() const noexcept;

  const CountSketchParams& count_sketch(Projection p) const;
  const Matrix& projection_matrix(Projection p) const;
  const FftPlan& fft() const;

  /// Σ_i pair_feature(ψ¹(e_i), ψ²(e_i)): the sketch of the identity matrix.
  /// Computed on first use, once per config, thread-safe.
  std::span<const double> identity_feature() const;

 private:
  struct State;
  explicit SketchConfig(std::shared_ptr<State> state) : state_(std::move(state)) {}
  std::shared_ptr<State> state_;
};

/// ψ^i_θ(x): spectral (complex, post-DFT) for tensor sketch, real otherwise.
class SketchedVector {
 public:
  SketchedVector(Projection origin, std::uint64_t fingerprint, std::vector<double> real)
      : origin_(origin), fingerprint_(fingerprint), real_(std::move(real)) {}
  SketchedVector(Projection origin, std::uint64_t fingerprint, std::vector<Complex> spectral)
      : origin_(origin), fingerprint_(fingerprint), spectral_(std::move(spectral)) {}

  Projection origin() const noexcept { return origin_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  bool is_spectral() const noexcept { return !spectral_.empty(); }
  std::size_t size() const noexcept { return is_spectral() ? spectral_.size() : real_.size(); }
  std::span<const double> real() const noexcept { return real_; }
  std::span<const Complex> spectral() const noexcept { return spectral_; }

 private:
  Projection origin_;
  std::uint64_t fingerprint_;
  std::vector<double> real_;
  std::vector<Complex> spectral_;
};

/// Ψ^i(X): n sketched columns of length D, stored column-major.
class SketchedMatrix {
 public:
  SketchedMatrix(Projection origin, std::uint64_t fingerprint, std::size_t dim,
                 std::size_t count, bool spectral);

  Projection origin() const noexcept { return origin_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  bool is_spectral() const noexcept { return spectral_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return count_; }

  std::span<double> real_column(std::size_t j) { return {real_.data() + j * dim_, dim_}; }
  std::span<const double> real_column(std::size_t j) const {
    return {real_.data() + j * dim_, dim_};
  }
  std::span<Complex> spectral_column(std::size_t j) {
    return {spectral_data_.data() + j * dim_, dim_};
  }
  std::span<const Complex> spectral_column(std::size_t j) const {
    return {spectral_data_.data() + j * dim_, dim_};
  }

  SketchedVector column(std::size_t j) const;

  /// Ψ·W for an n×m real matrix W (column m of the result is Σ_n Ψ_{:,n} W_{n,m},
  /// summed in ascending n).
  SketchedMatrix times(const Matrix& w) const;

  /// Ψ·v as a single sketched vector.
  SketchedVector times(std::span<const double> v) const;

 private:
  Projection origin_;
  std::uint64_t fingerprint_;
  std::size_t dim_;
  std::size_t count_;
  bool spectral_;
  std::vector<double> real_;
  std::vector<Complex> spectral_data_;
};

/// ψ^i_θ(x). Linear in x. Throws kDimensionMismatch if x.size() ≠ d.
SketchedVector project(const SketchConfig& cfg, Projection i, std::span<const double> x);

/// Columnwise project.
SketchedMatrix project_all(const SketchConfig& cfg, Projection i, const LocalFeatureSet& x);
SketchedMatrix project_all(const SketchConfig& cfg, Projection i, const Matrix& x);

/// U(a ⊗ b): inverse DFT of a∘b (tensor sketch) or a∘b/√D (random Maclaurin).
/// Bilinear. Throws kConfigMismatch unless a comes from ψ¹ and b from ψ² of cfg.
std::vector<double> pair_feature(const SketchConfig& cfg, const SketchedVector& a,
                                 const SketchedVector& b);

/// Σ_n pair_feature(a_{:,n}, b_{:,n}), accumulated in ascending n. For tensor
/// sketch the sum runs in the spectral domain followed by one inverse DFT.
std::vector<double> pair_feature_sum(const SketchConfig& cfg, const SketchedMatrix& a,
                                     const SketchedMatrix& b);

}  // namespace ipccp

#endif  // IPCCP_SKETCH_HPP_
