// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/harness/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ipccp/grad.hpp"
#include "ipccp/harness/stats.hpp"
#include "ipccp/rng.hpp"

namespace ipccp::harness {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Pooling weights and exact target for one side of an inner product.
struct PreparedSide {
  LocalFeatureSet features;
  PolynomialSpec spec;
  Matrix weights;
  SymmetricMatrix target;
};

PreparedSide prepare_side(const Matrix& raw, const PolyTarget& poly, int k, Preprocess pre) {
  const LocalFeatureSet x(raw);
  LocalFeatureSet features = apply_preprocess(x, pre);
  if (poly.is_sqrt) {
    PolynomialSpec spec;
    spec.r_coeffs = {1.0};
    Matrix w = sqrt_weights(gram(features), k).weights;
    return {std::move(features), std::move(spec), std::move(w), isqrt_cov_exact(x, k, pre)};
  }
  Matrix w = poly_eval_matrix(poly.spec.r_coeffs, gram(features)).matrix();
  SymmetricMatrix target = poly_of_covariance(features, poly.spec);
  return {std::move(features), poly.spec, std::move(w), std::move(target)};
}

Json stats_json(const RunningStats& stats) {
  Json j;
  j["count"] = stats.count();
  j["mean"] = stats.mean();
  j["min"] = stats.min();
  j["max"] = stats.max();
  if (auto sd = stats.stddev()) j["stddev"] = *sd;
  if (auto se = stats.standard_error()) j["standard_error"] = *se;
  return j;
}

}  // namespace

std::optional<SketchKind> parse_sketch(std::string_view name) noexcept {
  if (name == "ts") return SketchKind::kTensorSketch;
  if (name == "rm") return SketchKind::kRandomMaclaurin;
  return std::nullopt;
}

std::string_view to_string(Distribution dist) noexcept {
  return dist == Distribution::kGaussian ? "gaussian" : "uniform";
}

std::optional<Distribution> parse_distribution(std::string_view name) noexcept {
  if (name == "gaussian") return Distribution::kGaussian;
  if (name == "uniform") return Distribution::kUniform;
  return std::nullopt;
}

Matrix generate_features(const GenOptions& opts, std::size_t index) {
  if (opts.d == 0 || opts.n == 0) throw Error(ErrorCode::kInvalidArgument, "d and n must be positive");
  const CounterRng rng(opts.seed, index);
  Matrix x(opts.d, opts.n);
  for (std::size_t j = 0; j < opts.n; ++j) {
    for (std::size_t a = 0; a < opts.d; ++a) {
      const std::uint64_t i = a + opts.d * j;
      x(a, j) = opts.dist == Distribution::kGaussian ? rng.normal(i) : 2.0 * rng.uniform(i) - 1.0;
    }
  }
  return x;
}

std::vector<std::filesystem::path> write_generated(const GenOptions& opts,
                                                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < opts.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "features_%04zu.spf", i);
    paths.push_back(dir / name);
    write_features(paths.back(), generate_features(opts, i), opts.type);
  }
  return paths;
}

PolyTarget parse_poly(std::span<const std::string> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "empty polynomial");
  PolyTarget t;
  if (tokens.size() == 1) {
    const std::string& name = tokens[0];
    if (name == "sqrt") {
      t.is_sqrt = true;
      t.label = "sqrt";
      return t;
    }
    if (name == "x" || name == "x2" || name == "x3") {
      t.spec = PolynomialSpec::monomial(name == "x" ? 1 : name[1] - '0');
      t.label = name;
      return t;
    }
  }
  std::vector<double> q;
  for (const auto& tok : tokens) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "polynomial must be sqrt, x, x2, x3 or a list of coefficients, got '" + tok + "'");
    }
    q.push_back(v);
  }
  t.spec = PolynomialSpec::from_q(q);
  for (std::size_t i = 0; i < q.size(); ++i) t.label += (i ? "," : "") + format_double(q[i]);
  return t;
}

UnbiasednessResult run_unbiasedness(const Matrix& x, const Matrix& y,
                                    const UnbiasednessOptions& opts, const Json& config_echo) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "X has d = " + std::to_string(x.rows()) +
                                                   " but Y has d = " + std::to_string(y.rows()));
  }
  if (opts.trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be positive");
  const auto start = Clock::now();
  const PreparedSide sx = prepare_side(x, opts.poly_x, opts.iterations, opts.preprocess);
  const PreparedSide sy = prepare_side(y, opts.poly_y, opts.iterations, opts.preprocess);
  const std::size_t dim = sx.features.dim();
  // Validate the sketch dimensions once, before spawning workers.
  SketchConfig::make(opts.kind, dim, opts.output_dim, opts.seed);

  std::vector<double> values(opts.trials);
  const std::size_t threads = opts.threads ? opts.threads : worker_count();
  parallel_for(opts.trials, threads, [&](std::size_t t) {
    const auto cfg = SketchConfig::make(opts.kind, dim, opts.output_dim, trial_seed(opts.seed, t));
    const auto fx = poly_pool(sx.features, sx.spec, cfg, sx.weights);
    const auto fy = poly_pool(sy.features, sy.spec, cfg, sy.weights);
    values[t] = dot(fx.data, fy.data);
  });

  RunningStats stats;
  Json records = Json::array();
  for (std::size_t t = 0; t < opts.trials; ++t) {
    stats.add(values[t]);
    records.push_back({{"trial", t}, {"seed", trial_seed(opts.seed, t)}, {"value", values[t]}});
  }

  UnbiasednessResult r;
  r.trials = opts.trials;
  r.mean = stats.mean();
  r.standard_error = stats.standard_error();
  r.oracle = frobenius_inner(sx.target, sy.target);
  if (r.standard_error && *r.standard_error > 0.0) r.z_score = (r.mean - r.oracle) / *r.standard_error;

  Json config = config_echo;
  config["experiment"] = "unbiasedness";
  config["sketch"] = std::string(to_string(opts.kind));
  config["D"] = opts.output_dim;
  config["k"] = opts.iterations;
  config["poly"] = opts.poly_x.label;
  config["poly_y"] = opts.poly_y.label;
  config["preprocess"] = std::string(to_string(opts.preprocess));
  config["trials"] = opts.trials;
  config["seed"] = opts.seed;
  config["d"] = x.rows();
  config["d_pooled"] = dim;
  config["n_x"] = x.cols();
  config["n_y"] = y.cols();

  Json agg = stats_json(stats);
  agg["oracle"] = r.oracle;
  if (r.z_score) agg["z_score"] = *r.z_score;
  if (r.oracle != 0.0) agg["relative_bias"] = (r.mean - r.oracle) / std::abs(r.oracle);

  r.payload = {{"experiment", "unbiasedness"}, {"config", config}, {"aggregate", agg},
               {"records", records}};
  r.timing = {{"wall_seconds", seconds_since(start)}, {"threads", threads}};
  return r;
}

std::vector<ConvergenceRow> run_convergence(const Matrix& x, int k_max, Preprocess preprocess) {
  if (k_max < 1 || k_max > kMaxNsIterations) {
    throw Error(ErrorCode::kInvalidArgument,
                "k-max must be in [1, " + std::to_string(kMaxNsIterations) + "]");
  }
  const LocalFeatureSet features = apply_preprocess(LocalFeatureSet(x), preprocess);
  const SymmetricMatrix s = gram(features);
  const double tr = trace(s.matrix());
  if (!(tr > kZeroTraceThreshold)) throw Error(ErrorCode::kZeroTrace, "descriptors are all zero");
  const SymmetricMatrix a = SymmetricMatrix::symmetrize(s.matrix() * (1.0 / tr));
  const NsHistory hist = ns_iterate_history(a, k_max);
  const Matrix exact = matrix_sqrt_exact(covariance_feature(features)).matrix();
  const Matrix& xm = features.matrix();

  std::vector<ConvergenceRow> rows;
  for (int k = 1; k <= k_max; ++k) {
    const Matrix w = hist.z[k] * (1.0 / std::sqrt(tr));
    const Matrix approx = multiply_a_bt(multiply(xm, w), xm);
    const double resid = frobenius_norm(hist.y[k] - multiply(a.matrix(), hist.z[k]));
    rows.push_back({k, relative_frobenius_error(approx, exact), resid});
  }
  return rows;
}

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  if (opts.reps < 1) throw Error(ErrorCode::kInvalidArgument, "reps must be positive");
  if (opts.warmup < 0) throw Error(ErrorCode::kInvalidArgument, "warmup must be non-negative");

  struct Cell {
    BenchRow row;
    LocalFeatureSet x;
    SketchConfig cfg;
    std::vector<double> upstream;
    std::vector<double> forward_s;
    std::vector<double> forward_vjp_s;
  };
  std::vector<Cell> cells;
  for (std::size_t d : opts.d_list) {
    for (std::size_t n : opts.n_list) {
      for (std::size_t big_d : opts.output_dims) {
        const std::size_t index = cells.size();
        GenOptions gen;
        gen.d = d;
        gen.n = n;
        gen.seed = opts.seed;
        const CounterRng up_rng(opts.seed, (1u << 20) + index);
        std::vector<double> upstream(big_d);
        for (std::size_t j = 0; j < big_d; ++j) upstream[j] = up_rng.normal(j);
        cells.push_back({BenchRow{opts.kind, d, n, big_d, opts.iterations, opts.reps, 0.0, 0.0},
                         LocalFeatureSet(generate_features(gen, index)),
                         SketchConfig::make(opts.kind, d, big_d, trial_seed(opts.seed, index)),
                         std::move(upstream),
                         {},
                         {}});
      }
    }
  }

  double sink = 0.0;
  const auto forward = [&](const Cell& c) { sink += ipccp(c.x, c.cfg, opts.iterations).data[0]; };
  const auto forward_vjp = [&](const Cell& c) {
    const auto taped = forward_with_tape(c.x, c.cfg, opts.iterations);
    sink += vjp(taped.tape, c.upstream)(0, 0);
  };
  // Reps are interleaved across cells so that slow periods on a shared
  // machine hit every cell alike instead of skewing one of them.
  for (auto& c : cells) {
    for (int i = 0; i < opts.warmup; ++i) {
      forward(c);
      forward_vjp(c);
    }
  }
  for (int r = 0; r < opts.reps; ++r) {
    for (auto& c : cells) {
      auto start = Clock::now();
      forward(c);
      c.forward_s.push_back(seconds_since(start));
      start = Clock::now();
      forward_vjp(c);
      c.forward_vjp_s.push_back(seconds_since(start));
    }
  }
  if (!std::isfinite(sink)) throw Error(ErrorCode::kNumericalMismatch, "non-finite output");

  std::vector<BenchRow> rows;
  for (auto& c : cells) {
    c.row.forward_median_s = median(c.forward_s);
    c.row.forward_vjp_median_s = median(c.forward_vjp_s);
    rows.push_back(c.row);
  }
  return rows;
}

std::string_view to_string(GradFunction f) noexcept {
  switch (f) {
    case GradFunction::kIpccp:
      return "ipccp";
    case GradFunction::kCompact:
      return "compact";
    case GradFunction::kLinear:
      return "linear";
  }
  return "?";
}

std::optional<GradFunction> parse_grad_function(std::string_view name) noexcept {
  for (auto f : {GradFunction::kIpccp, GradFunction::kCompact, GradFunction::kLinear})
    if (name == to_string(f)) return f;
  return std::nullopt;
}

GradcheckResult run_gradcheck(const Matrix& x, const GradcheckOptions& opts,
                              const Json& config_echo) {
  const auto start = Clock::now();
  const std::size_t pooled_dim =
      opts.preprocess == Preprocess::kGaussian && opts.function != GradFunction::kLinear
          ? x.rows() + 1
          : x.rows();
  const auto cfg = SketchConfig::make(opts.kind, pooled_dim, opts.output_dim, opts.seed);
  DifferentiableFeature f;
  switch (opts.function) {
    case GradFunction::kIpccp:
      f = ipccp_feature(cfg, opts.iterations, opts.preprocess);
      break;
    case GradFunction::kCompact:
      f = compact_feature(cfg, opts.preprocess);
      break;
    case GradFunction::kLinear:
      f = projection_feature(cfg, 0);
      break;
  }
  GradcheckResult r;
  r.max_rel_err = finite_diff_check(f, x, opts.eps, opts.probes, opts.seed);
  r.within_tol = r.max_rel_err <= opts.tol;

  Json config = config_echo;
  config["experiment"] = "gradcheck";
  config["function"] = std::string(to_string(opts.function));
  config["sketch"] = std::string(to_string(opts.kind));
  config["D"] = opts.output_dim;
  config["k"] = opts.iterations;
  config["eps"] = opts.eps;
  config["probes"] = opts.probes;
  config["seed"] = opts.seed;
  config["preprocess"] = std::string(to_string(opts.preprocess));
  config["tol"] = opts.tol;
  config["d"] = x.rows();
  config["n"] = x.cols();
  r.payload = {{"experiment", "gradcheck"},
               {"config", config},
               {"max_rel_err", r.max_rel_err},
               {"within_tol", r.within_tol}};
  r.timing = {{"wall_seconds", seconds_since(start)}};
  return r;
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows) {
  out << "k,sqrt_rel_err,coupling_residual\r\n";
  for (const auto& r : rows) {
    out << r.k << ',' << format_double(r.sqrt_rel_err) << ','
        << format_double(r.coupling_residual) << "\r\n";
  }
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "sketch,d,n,D,k,reps,forward_median_s,forward_vjp_median_s\r\n";
  for (const auto& r : rows) {
    out << to_string(r.kind) << ',' << r.d << ',' << r.n << ',' << r.output_dim << ','
        << r.iterations << ',' << r.reps << ',' << format_double(r.forward_median_s) << ','
        << format_double(r.forward_vjp_median_s) << "\r\n";
  }
}

std::string render_report(const Json& payload, const Json& timing) {
  Json doc = payload;
  doc["timing"] = timing;
  return doc.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace ipccp::harness
