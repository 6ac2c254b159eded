// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef IPCCP_HARNESS_STATS_HPP_
#define IPCCP_HARNESS_STATS_HPP_

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace ipccp::harness {

/// Welford accumulator. Feeding values in a fixed order gives bit-identical
/// results regardless of how they were produced.
class RunningStats {
 public:
  void add(double x) noexcept;

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  /// Sample variance (n − 1); empty for fewer than two values.
  std::optional<double> variance() const noexcept;
  std::optional<double> stddev() const noexcept;
  /// stddev / √n; empty for fewer than two values.
  std::optional<double> standard_error() const noexcept;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

/// Median (mean of the middle pair for even sizes). Empty input gives NaN.
double median(std::vector<double> values);

/// Worker count: SPF_THREADS if set to a positive integer, otherwise the
/// available hardware parallelism (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, count) on `workers` threads. Each worker owns a
/// contiguous index range; the first exception is rethrown after joining.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace ipccp::harness

#endif  // IPCCP_HARNESS_STATS_HPP_
