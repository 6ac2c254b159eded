// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_FFT_HPP_
#define IPCCP_FFT_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ipccp {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n) noexcept;

/// Radix-2 iterative transform of a fixed power-of-two length with
/// precomputed twiddles and bit-reversal table.
///
/// forward: X_j = Σ_t x_t e^{-2πi jt/N}
/// inverse: x_t = (1/N) Σ_j X_j e^{+2πi jt/N}
class FftPlan {
 public:
  /// Throws kBadLength unless n is a power of two (n = 1 allowed).
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::span<Complex> v) const;
  void inverse(std::span<Complex> v) const;

 private:
  void transform(std::span<Complex> v, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddle_;  // e^{-2πi j/N}, j < N/2
};

std::vector<Complex> dft(std::span<const Complex> v);
std::vector<Complex> idft(std::span<const Complex> v);
std::vector<Complex> dft(std::span<const double> v);

}  // namespace ipccp

#endif  // IPCCP_FFT_HPP_
