// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_RNG_HPP_
#define IPCCP_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ipccp {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, index), so parameters can be generated in any order and
/// reproduced individually.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
    return splitmix64(key_ ^ splitmix64(index));
  }

  /// Uniform in (0, 1); never returns 0.
  double uniform(std::uint64_t index) const noexcept {
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// ±1 with equal probability.
  double sign(std::uint64_t index) const noexcept {
    return (bits(index) >> 63) ? -1.0 : 1.0;
  }

  /// Standard normal by Box–Muller from draws 2i and 2i+1.
  double normal(std::uint64_t index) const noexcept {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

/// Seed for Monte-Carlo trial `trial` of an experiment seeded with `base`.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) noexcept {
  return splitmix64(base ^ splitmix64(trial ^ 0xA24BAED4963EE407ULL));
}

}  // namespace ipccp

#endif  // IPCCP_RNG_HPP_
