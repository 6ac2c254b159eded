// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_LINALG_HPP_
#define IPCCP_LINALG_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "ipccp/matrix.hpp"

namespace ipccp {

/// A set of n local descriptors of dimension d, stored as a d×n matrix whose
/// column j is descriptor x_j. Always non-empty and finite.
class LocalFeatureSet {
 public:
  /// Validates d ≥ 1, n ≥ 1 and finiteness; throws kInvalidArgument otherwise.
  explicit LocalFeatureSet(Matrix data);

  std::size_t dim() const noexcept { return data_.rows(); }
  std::size_t count() const noexcept { return data_.cols(); }
  const Matrix& matrix() const noexcept { return data_; }
  std::vector<double> descriptor(std::size_t j) const { return data_.column(j); }

 private:
  Matrix data_;
};

/// Square matrix that is symmetric to 1e-12·max(1, |a_ij|) entrywise.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  /// Throws kNotSymmetric when the tolerance is violated.
  explicit SymmetricMatrix(Matrix data);

  /// Averages `data` with its transpose; never throws for square input.
  static SymmetricMatrix symmetrize(const Matrix& data);
  static SymmetricMatrix identity(std::size_t m) {
    return SymmetricMatrix(Matrix::identity(m));
  }

  std::size_t order() const noexcept { return data_.rows(); }
  const Matrix& matrix() const noexcept { return data_; }
  double operator()(std::size_t i, std::size_t j) const { return data_(i, j); }

 private:
  Matrix data_;
};

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

/// S_ij = ⟨x_i, x_j⟩ (n×n).
SymmetricMatrix gram(const LocalFeatureSet& x);

/// C = Σ_n x_n x_nᵗ (d×d).
SymmetricMatrix covariance_feature(const LocalFeatureSet& x);

/// Cyclic Jacobi eigensolver. Throws kNonConvergence if the off-diagonal mass
/// is still above 1e-12·‖A‖_F after 100 sweeps.
EigenDecomposition sym_eig(const SymmetricMatrix& a);

/// Principal square root through the eigendecomposition. Eigenvalues in
/// [-1e-10·‖A‖₂, m·ε·‖A‖₂] are taken as zero; anything more negative is kNotPsd.
SymmetricMatrix matrix_sqrt_exact(const SymmetricMatrix& a);

double frobenius_inner(const Matrix& a, const Matrix& b);
double frobenius_inner(const SymmetricMatrix& a, const SymmetricMatrix& b);

/// Σ_j c_j A^j by Horner's rule (A⁰ = I). An empty list gives the zero matrix.
SymmetricMatrix poly_eval_matrix(std::span<const double> coeffs, const SymmetricMatrix& a);

/// Largest |eigenvalue|.
double spectral_norm(const SymmetricMatrix& a);

}  // namespace ipccp

#endif  // IPCCP_LINALG_HPP_
