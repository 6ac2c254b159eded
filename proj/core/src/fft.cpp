// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "ipccp/error.hpp"

namespace ipccp {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::kBadLength,
                "transform length must be a power of two, got " + std::to_string(n));
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    bitrev_[i] = r;
  }
  twiddle_.resize(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    twiddle_[j] = Complex(std::cos(angle), std::sin(angle));
  }
}

void FftPlan::forward(std::span<Complex> v) const { transform(v, false); }

void FftPlan::inverse(std::span<Complex> v) const {
  transform(v, true);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& x : v) x *= scale;
}

void FftPlan::transform(std::span<Complex> v, bool inverse) const {
  if (v.size() != n_) {
    throw Error(ErrorCode::kBadLength, "plan of length " + std::to_string(n_) +
                                           " applied to " + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < n_; ++i)
    if (i < bitrev_[i]) std::swap(v[i], v[bitrev_[i]]);

  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        Complex w = twiddle_[j * stride];
        if (inverse) w = std::conj(w);
        const Complex u = v[start + j];
        const Complex t = w * v[start + j + half];
        v[start + j] = u + t;
        v[start + j + half] = u - t;
      }
    }
  }
}

std::vector<Complex> dft(std::span<const Complex> v) {
  std::vector<Complex> out(v.begin(), v.end());
  FftPlan(out.size()).forward(out);
  return out;
}

std::vector<Complex> idft(std::span<const Complex> v) {
  std::vector<Complex> out(v.begin(), v.end());
  FftPlan(out.size()).inverse(out);
  return out;
}

std::vector<Complex> dft(std::span<const double> v) {
  std::vector<Complex> out(v.begin(), v.end());
  FftPlan(out.size()).forward(out);
  return out;
}

}  // namespace ipccp
