// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

// ipccp: command-line driver for data generation, Monte-Carlo unbiasedness
// runs, Newton–Schulz convergence tables, timing sweeps and gradient checks.
//
// Exit codes: 0 success, 1 tolerance violated, 2 usage / IO / input error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ipccp/harness/experiments.hpp"
#include "ipccp/harness/feature_file.hpp"

namespace {

using namespace ipccp;
using namespace ipccp::harness;

constexpr int kExitOk = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitUsage = 2;

const std::vector<std::string> kSketchNames{"ts", "rm"};
const std::vector<std::string> kPreprocessNames{"none", "center", "gaussian"};

// Writes to the named file, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

struct GenArgs {
  GenOptions opts;
  std::string dist = "gaussian";
  std::string dtype = "f64";
  std::string out;
};

struct UnbiasednessArgs {
  std::vector<std::string> in;
  std::string sketch = "ts";
  std::size_t output_dim = 256;
  int k = kDefaultNsIterations;
  std::vector<std::string> poly{"x"};
  std::vector<std::string> poly_y;
  std::string preprocess = "none";
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double z_max = 5.0;
  std::string out;
};

struct ConvergenceArgs {
  std::string in;
  int k_max = 20;
  std::string preprocess = "none";
  std::string out;
};

struct BenchArgs {
  BenchOptions opts;
  std::string sketch = "rm";
  std::string out;
};

struct GradcheckArgs {
  std::string in;
  std::string sketch = "ts";
  std::string function = "ipccp";
  std::string preprocess = "none";
  GradcheckOptions opts;
  std::string out;
};

int run_gen(const GenArgs& a) {
  GenOptions opts = a.opts;
  opts.dist = *parse_distribution(a.dist);
  opts.type = a.dtype == "f32" ? ElementType::kFloat32 : ElementType::kFloat64;
  const auto paths = write_generated(opts, a.out);
  for (const auto& p : paths) std::cout << p.string() << "\n";
  return kExitOk;
}

int run_unbiasedness_cmd(const UnbiasednessArgs& a) {
  const Matrix x = read_features(a.in[0]);
  const Matrix y = a.in.size() > 1 ? read_features(a.in[1]) : x;
  UnbiasednessOptions opts;
  opts.kind = *parse_sketch(a.sketch);
  opts.output_dim = a.output_dim;
  opts.iterations = a.k;
  opts.poly_x = parse_poly(a.poly);
  opts.poly_y = a.poly_y.empty() ? opts.poly_x : parse_poly(a.poly_y);
  opts.preprocess = *parse_preprocess(a.preprocess);
  opts.trials = a.trials;
  opts.seed = a.seed;
  const Json echo = {{"in", a.in}, {"z_max", a.z_max}};
  const auto r = run_unbiasedness(x, y, opts, echo);
  emit(a.out, render_report(r.payload, r.timing));

  std::ostringstream summary;
  summary.precision(17);
  summary << "mean=" << r.mean << " oracle=" << r.oracle;
  if (r.standard_error) summary << " se=" << *r.standard_error;
  if (r.z_score) summary << " z=" << *r.z_score;
  if (!a.out.empty()) std::cout << summary.str() << "\n";
  if (r.z_score && std::abs(*r.z_score) >= a.z_max) {
    std::cerr << "ipccp unbiasedness: |z| >= " << a.z_max << "\n";
    return kExitTolerance;
  }
  return kExitOk;
}

int run_convergence_cmd(const ConvergenceArgs& a) {
  const Matrix x = read_features(a.in);
  const auto rows = run_convergence(x, a.k_max, *parse_preprocess(a.preprocess));
  std::ostringstream csv;
  write_convergence_csv(csv, rows);
  emit(a.out, csv.str());
  return kExitOk;
}

int run_bench_cmd(const BenchArgs& a) {
  BenchOptions opts = a.opts;
  opts.kind = *parse_sketch(a.sketch);
  const auto rows = run_bench(opts);
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  emit(a.out, csv.str());
  return kExitOk;
}

int run_gradcheck_cmd(const GradcheckArgs& a) {
  const Matrix x = read_features(a.in);
  GradcheckOptions opts = a.opts;
  opts.kind = *parse_sketch(a.sketch);
  opts.function = *parse_grad_function(a.function);
  opts.preprocess = *parse_preprocess(a.preprocess);
  const auto r = run_gradcheck(x, opts, {{"in", a.in}});
  emit(a.out, render_report(r.payload, r.timing));
  if (!a.out.empty()) {
    char line[64];
    std::snprintf(line, sizeof line, "max_rel_err=%.17g", r.max_rel_err);
    std::cout << line << "\n";
  }
  if (!r.within_tol) {
    std::cerr << "ipccp gradcheck: max relative error " << r.max_rel_err << " exceeds --tol "
              << opts.tol << "\n";
    return kExitTolerance;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketched square-root covariance pooling: experiments and tools", "ipccp"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write seeded random descriptor files");
  gen_cmd->add_option("--d", gen.opts.d, "Descriptor dimension")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n", gen.opts.n, "Descriptors per file")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--count", gen.opts.count, "Number of files")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.opts.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--dist", gen.dist, "Entry distribution")
      ->capture_default_str()->check(CLI::IsMember({"gaussian", "uniform"}));
  gen_cmd->add_option("--dtype", gen.dtype, "Stored element type")
      ->capture_default_str()->check(CLI::IsMember({"f64", "f32"}));
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  UnbiasednessArgs unb;
  auto* unb_cmd = app.add_subcommand("unbiasedness", "Monte-Carlo mean of sketched inner products vs the exact value");
  unb_cmd->add_option("--in", unb.in, "Feature file X, optionally followed by Y (default Y = X)")
      ->required()->expected(1, 2)->check(CLI::ExistingFile);
  unb_cmd->add_option("--sketch", unb.sketch, "Sketch kind")->capture_default_str()->check(CLI::IsMember(kSketchNames));
  unb_cmd->add_option("--D", unb.output_dim, "Sketch dimension")->capture_default_str()->check(CLI::PositiveNumber);
  unb_cmd->add_option("--k", unb.k, "Newton-Schulz iterations (sqrt target)")
      ->capture_default_str()->check(CLI::Range(1, kMaxNsIterations));
  unb_cmd->add_option("--poly", unb.poly, "Target: sqrt, x, x2, x3 or comma-separated q coefficients (ascending)")
      ->capture_default_str()->delimiter(',');
  unb_cmd->add_option("--poly-y", unb.poly_y, "Target for Y (default: same as --poly)")->delimiter(',');
  unb_cmd->add_option("--preprocess", unb.preprocess, "Input substitution")
      ->capture_default_str()->check(CLI::IsMember(kPreprocessNames));
  unb_cmd->add_option("--trials", unb.trials, "Number of sketch seeds")->capture_default_str()->check(CLI::PositiveNumber);
  unb_cmd->add_option("--seed", unb.seed, "Base seed")->capture_default_str();
  unb_cmd->add_option("--z-max", unb.z_max, "Exit 1 when |z| reaches this")->capture_default_str();
  unb_cmd->add_option("--out", unb.out, "Report JSON (default: stdout)");

  ConvergenceArgs conv;
  auto* conv_cmd = app.add_subcommand("convergence", "Newton-Schulz error and coupling residual per iteration");
  conv_cmd->add_option("--in", conv.in, "Feature file")->required()->check(CLI::ExistingFile);
  conv_cmd->add_option("--k-max", conv.k_max, "Largest iteration count")
      ->capture_default_str()->check(CLI::Range(1, kMaxNsIterations));
  conv_cmd->add_option("--preprocess", conv.preprocess, "Input substitution")
      ->capture_default_str()->check(CLI::IsMember(kPreprocessNames));
  conv_cmd->add_option("--out", conv.out, "Report CSV (default: stdout)");

  BenchArgs bench;
  bench.opts.d_list = {64};
  bench.opts.n_list = {64};
  bench.opts.output_dims = {1024};
  auto* bench_cmd = app.add_subcommand("bench", "Median wall time of ipccp forward and forward+vjp");
  bench_cmd->add_option("--sketch", bench.sketch, "Sketch kind")->capture_default_str()->check(CLI::IsMember(kSketchNames));
  bench_cmd->add_option("--d-list", bench.opts.d_list, "Descriptor dimensions")->capture_default_str()->delimiter(',');
  bench_cmd->add_option("--n-list", bench.opts.n_list, "Descriptor counts")->capture_default_str()->delimiter(',');
  bench_cmd->add_option("--D-list", bench.opts.output_dims, "Sketch dimensions")->capture_default_str()->delimiter(',');
  bench_cmd->add_option("--k", bench.opts.iterations, "Newton-Schulz iterations")
      ->capture_default_str()->check(CLI::Range(1, kMaxNsIterations));
  bench_cmd->add_option("--reps", bench.opts.reps, "Timed repetitions per cell")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench.opts.warmup, "Untimed runs per cell")->capture_default_str()->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--seed", bench.opts.seed, "Input and sketch seed")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Report CSV (default: stdout)");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare vjp against central finite differences");
  grad_cmd->add_option("--in", grad.in, "Feature file")->required()->check(CLI::ExistingFile);
  grad_cmd->add_option("--sketch", grad.sketch, "Sketch kind")->capture_default_str()->check(CLI::IsMember(kSketchNames));
  grad_cmd->add_option("--D", grad.opts.output_dim, "Sketch dimension")->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--k", grad.opts.iterations, "Newton-Schulz iterations")
      ->capture_default_str()->check(CLI::Range(1, kMaxNsIterations));
  grad_cmd->add_option("--eps", grad.opts.eps, "Finite-difference step")->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--probes", grad.opts.probes, "Random directions")->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad.opts.seed, "Sketch and probe seed")->capture_default_str();
  grad_cmd->add_option("--function", grad.function, "Function to differentiate")
      ->capture_default_str()->check(CLI::IsMember({"ipccp", "compact", "linear"}));
  grad_cmd->add_option("--preprocess", grad.preprocess, "Input substitution")
      ->capture_default_str()->check(CLI::IsMember(kPreprocessNames));
  grad_cmd->add_option("--tol", grad.opts.tol, "Exit 1 above this error")->capture_default_str();
  grad_cmd->add_option("--out", grad.out, "Report JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*gen_cmd) return run_gen(gen);
    if (*unb_cmd) return run_unbiasedness_cmd(unb);
    if (*conv_cmd) return run_convergence_cmd(conv);
    if (*bench_cmd) return run_bench_cmd(bench);
    if (*grad_cmd) return run_gradcheck_cmd(grad);
  } catch (const std::exception& e) {
    std::cerr << "ipccp " << name << ": " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
