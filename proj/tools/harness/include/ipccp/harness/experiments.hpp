// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

// The experiments behind the `ipccp` command-line tool. Each one returns plain
// rows or a JSON payload; timings are always kept apart from the payload so the
// payload is byte-reproducible for a fixed seed.

#ifndef IPCCP_HARNESS_EXPERIMENTS_HPP_
#define IPCCP_HARNESS_EXPERIMENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipccp/harness/feature_file.hpp"
#include "ipccp/pooling.hpp"
#include "json.hpp"

namespace ipccp::harness {

using Json = nlohmann::json;

std::optional<SketchKind> parse_sketch(std::string_view name) noexcept;

// ---- gen ----

enum class Distribution { kGaussian, kUniform };

std::string_view to_string(Distribution dist) noexcept;
std::optional<Distribution> parse_distribution(std::string_view name) noexcept;

struct GenOptions {
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  Distribution dist = Distribution::kGaussian;
  ElementType type = ElementType::kFloat64;
};

/// File `index` of a generated set: entry (a, j) is draw a + d·j of the
/// counter generator keyed by (seed, index). Uniform draws lie in [−1, 1].
Matrix generate_features(const GenOptions& opts, std::size_t index);

/// Writes `count` files named features_0000.spf, features_0001.spf, …
/// into `dir` (created if missing) and returns their paths.
std::vector<std::filesystem::path> write_generated(const GenOptions& opts,
                                                   const std::filesystem::path& dir);

// ---- unbiasedness ----

/// A pooling target: either the Newton–Schulz square root or a polynomial q.
struct PolyTarget {
  bool is_sqrt = false;
  PolynomialSpec spec;  // unused for sqrt
  std::string label;    // canonical spelling, echoed into reports
};

/// Accepts "sqrt", "x", "x2", "x3", or one or more numbers giving the
/// coefficients of q in ascending powers. Throws kInvalidArgument otherwise.
PolyTarget parse_poly(std::span<const std::string> tokens);

struct UnbiasednessOptions {
  SketchKind kind = SketchKind::kTensorSketch;
  std::size_t output_dim = 256;
  int iterations = kDefaultNsIterations;
  PolyTarget poly_x;
  PolyTarget poly_y;
  Preprocess preprocess = Preprocess::kNone;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = worker_count()
};

struct UnbiasednessResult {
  std::size_t trials = 0;
  double mean = 0.0;
  std::optional<double> standard_error;
  double oracle = 0.0;
  std::optional<double> z_score;
  Json payload;  // configuration echo, per-trial records, aggregates
  Json timing;   // wall clock and worker count
};

/// For each trial t, draws a sketch with seed trial_seed(seed, t) and records
/// ⟨φ(X), φ(Y)⟩; the oracle is the exact Frobenius inner product of the two
/// un-sketched targets. `config_echo` is merged into the payload's config.
UnbiasednessResult run_unbiasedness(const Matrix& x, const Matrix& y,
                                    const UnbiasednessOptions& opts,
                                    const Json& config_echo = Json::object());

// ---- convergence ----

struct ConvergenceRow {
  int k = 0;
  double sqrt_rel_err = 0.0;
  double coupling_residual = 0.0;
};

/// Per k in 1..k_max: relative Frobenius error of X′·sqrt_weights·X′ᵗ against
/// the eigendecomposition square root of C, and ‖Y_k − A·Z_k‖_F.
std::vector<ConvergenceRow> run_convergence(const Matrix& x, int k_max,
                                            Preprocess preprocess = Preprocess::kNone);

// ---- bench ----

struct BenchOptions {
  SketchKind kind = SketchKind::kRandomMaclaurin;
  std::vector<std::size_t> d_list;
  std::vector<std::size_t> n_list;
  std::vector<std::size_t> output_dims;
  int iterations = kDefaultNsIterations;
  int reps = 5;
  int warmup = 3;
  std::uint64_t seed = 0;
};

struct BenchRow {
  SketchKind kind = SketchKind::kRandomMaclaurin;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t output_dim = 0;
  int iterations = 0;
  int reps = 0;
  double forward_median_s = 0.0;
  double forward_vjp_median_s = 0.0;
};

/// Times ipccp forward and forward+vjp for every (d, n, D) cell. Input and
/// sketch generation happen before the clock starts.
std::vector<BenchRow> run_bench(const BenchOptions& opts);

// ---- gradcheck ----

enum class GradFunction { kIpccp, kCompact, kLinear };

std::string_view to_string(GradFunction f) noexcept;
std::optional<GradFunction> parse_grad_function(std::string_view name) noexcept;

struct GradcheckOptions {
  SketchKind kind = SketchKind::kTensorSketch;
  std::size_t output_dim = 64;
  int iterations = 3;
  double eps = 1e-5;
  int probes = 8;
  std::uint64_t seed = 0;
  GradFunction function = GradFunction::kIpccp;
  Preprocess preprocess = Preprocess::kNone;
  double tol = 1e-5;
};

struct GradcheckResult {
  double max_rel_err = 0.0;
  bool within_tol = false;
  Json payload;
  Json timing;
};

GradcheckResult run_gradcheck(const Matrix& x, const GradcheckOptions& opts,
                              const Json& config_echo = Json::object());

// ---- output ----

/// RFC 4180 tables: header row, comma separated, CRLF line endings, numbers
/// printed with 17 significant digits.
void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows);
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

/// `payload` with a top-level "timing" member, pretty-printed, newline-ended.
std::string render_report(const Json& payload, const Json& timing);

/// Writes text to a file (kIo on failure).
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace ipccp::harness

#endif  // IPCCP_HARNESS_EXPERIMENTS_HPP_
