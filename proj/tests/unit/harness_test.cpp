// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "ipccp/harness/experiments.hpp"
#include "ipccp/harness/feature_file.hpp"
#include "ipccp/harness/stats.hpp"
#include "test_support.hpp"

namespace ipccp::harness {
namespace {

using testing::random_matrix;

TEST(FeatureFile, HeaderLayout) {
  const Matrix x{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  const auto bytes = encode_features(x);
  ASSERT_EQ(bytes.size(), 16u + 3 * 2 * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SPF1");
  EXPECT_EQ(bytes[4], 3);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[12], 8);
  // Column-major: the second stored value is x(1, 0) = 3.0 = 0x4008000000000000.
  EXPECT_EQ(bytes[16 + 8 + 7], 0x40);
  EXPECT_EQ(bytes[16 + 8 + 6], 0x08);
}

TEST(FeatureFile, RoundTripBothTypes) {
  const Matrix x = random_matrix(5, 7, 1);
  EXPECT_EQ(decode_features(encode_features(x)), x);
  const Matrix f = decode_features(encode_features(x, ElementType::kFloat32));
  const auto bytes = encode_features(x, ElementType::kFloat32);
  EXPECT_EQ(bytes.size(), 16u + 35 * 4);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_EQ(f.values()[i], static_cast<double>(static_cast<float>(x.values()[i])));
}

TEST(FeatureFile, RejectsMalformed) {
  const auto good = encode_features(random_matrix(2, 3, 2));
  auto expect_format = [](std::vector<std::uint8_t> bytes) {
    try {
      decode_features(bytes);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat);
    }
  };
  auto bad_magic = good;
  bad_magic[3] = '2';
  expect_format(bad_magic);
  auto bad_tag = good;
  bad_tag[12] = 2;
  expect_format(bad_tag);
  auto truncated = good;
  truncated.pop_back();
  expect_format(truncated);
  expect_format({good.begin(), good.begin() + 10});
  auto nan = encode_features(Matrix{{std::nan("")}});
  expect_format(nan);
}

TEST(FeatureFile, MissingFileIsIoError) {
  try {
    read_features("/nonexistent/dir/x.spf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Stats, WelfordMatchesTwoPass) {
  const Matrix m = random_matrix(1000, 1, 3);
  std::vector<double> v(m.values().begin(), m.values().end());
  RunningStats s;
  for (double x : v) s.add(x);
  const auto oracle = testing::summarize(v);
  EXPECT_NEAR(s.mean(), oracle.mean, 1e-14);
  EXPECT_NEAR(*s.standard_error(), oracle.se, 1e-14);
  EXPECT_EQ(s.min(), *std::min_element(v.begin(), v.end()));
  EXPECT_EQ(s.max(), *std::max_element(v.begin(), v.end()));
}

TEST(Stats, SingleValueHasNoSpread) {
  RunningStats s;
  s.add(4.0);
  EXPECT_EQ(s.mean(), 4.0);
  EXPECT_FALSE(s.standard_error().has_value());
  EXPECT_FALSE(s.variance().has_value());
}

TEST(Stats, Median) {
  EXPECT_EQ(median({3.5}), 3.5);
  EXPECT_EQ(median({5.0, 1.0, 3.0}), 3.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Stats, ParallelForCoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(103);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw Error(ErrorCode::kInvalidArgument, "boom");
                            }),
               Error);
}

TEST(Stats, WorkerCountHonorsEnvironment) {
  ::setenv("SPF_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::setenv("SPF_THREADS", "junk", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("SPF_THREADS");
}

TEST(ParsePoly, NamesAndCoefficients) {
  const std::vector<std::string> sqrt{"sqrt"}, x2{"x2"}, coeffs{"1", "-0.5", "2"}, bad{"x4"};
  EXPECT_TRUE(parse_poly(sqrt).is_sqrt);
  const auto p = parse_poly(x2);
  EXPECT_EQ(p.spec.bias, 0.0);
  EXPECT_EQ(p.spec.r_coeffs, (std::vector<double>{0.0, 1.0}));
  const auto q = parse_poly(coeffs);
  EXPECT_EQ(q.spec.bias, 1.0);
  EXPECT_EQ(q.spec.r_coeffs, (std::vector<double>{-0.5, 2.0}));
  EXPECT_EQ(q.label, "1,-0.5,2");
  EXPECT_THROW(parse_poly(bad), Error);
}

TEST(Gen, DeterministicPerSeedAndIndex) {
  GenOptions opts;
  opts.d = 3;
  opts.n = 4;
  opts.seed = 9;
  EXPECT_EQ(generate_features(opts, 0), generate_features(opts, 0));
  EXPECT_NE(generate_features(opts, 0), generate_features(opts, 1));
  opts.dist = Distribution::kUniform;
  const Matrix u = generate_features(opts, 2);
  for (double v : u.values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Gen, GaussianColumnMeanNearZero) {
  GenOptions opts;
  opts.d = 3;
  opts.n = 500;
  opts.seed = 4;
  // n·count = 10⁴ descriptors; each coordinate mean has σ = 1e-2.
  std::vector<double> sum(3);
  for (std::size_t f = 0; f < 20; ++f) {
    const Matrix x = generate_features(opts, f);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t j = 0; j < opts.n; ++j) sum[a] += x(a, j);
  }
  for (double s : sum) EXPECT_LE(std::abs(s / 1e4), 4.0 / std::sqrt(1e4));
}

TEST(Unbiasedness, ThreadCountDoesNotChangePayload) {
  const Matrix x = random_matrix(4, 5, 5);
  UnbiasednessOptions opts;
  opts.kind = SketchKind::kRandomMaclaurin;
  opts.output_dim = 16;
  const std::vector<std::string> poly{"x2"};
  opts.poly_x = opts.poly_y = parse_poly(poly);
  opts.trials = 50;
  opts.threads = 1;
  const auto a = run_unbiasedness(x, x, opts);
  opts.threads = 4;
  const auto b = run_unbiasedness(x, x, opts);
  EXPECT_EQ(a.payload.dump(), b.payload.dump());
  EXPECT_TRUE(a.z_score.has_value());
}

TEST(Unbiasedness, OracleIsExactFrobeniusProduct) {
  const Matrix x = random_matrix(3, 4, 6);
  const Matrix y = random_matrix(3, 6, 7);
  UnbiasednessOptions opts;
  const std::vector<std::string> poly{"x3"}, one{"1"};
  opts.poly_x = parse_poly(poly);
  opts.poly_y = parse_poly(one);
  opts.trials = 2;
  const Matrix c = testing::loop_multiply(x, testing::loop_transpose(x));
  const Matrix c3 = testing::loop_multiply(c, testing::loop_multiply(c, c));
  // ⟨C³, I⟩ = tr C³.
  EXPECT_NEAR(run_unbiasedness(x, y, opts).oracle, trace(c3), 1e-10 * trace(c3));
}

TEST(Convergence, SingleUnitDescriptorIsFixedPoint) {
  const auto rows = run_convergence(Matrix{{0.6}, {0.8}}, 10);
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& r : rows) {
    EXPECT_LE(r.sqrt_rel_err, 1e-12);
    EXPECT_LE(r.coupling_residual, 1e-10);
  }
}

TEST(Convergence, CsvIsCrlfWithHeader) {
  const auto rows = run_convergence(random_matrix(3, 5, 8), 2);
  std::ostringstream out;
  write_convergence_csv(out, rows);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("k,sqrt_rel_err,coupling_residual\r\n1,", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\r'), 3);
}

TEST(Bench, SingleRepAndCsvShape) {
  BenchOptions opts;
  opts.d_list = {3};
  opts.n_list = {4, 5};
  opts.output_dims = {8};
  opts.reps = 1;
  opts.warmup = 0;
  const auto rows = run_bench(opts);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].n, 5u);
  EXPECT_GT(rows[0].forward_median_s, 0.0);
  std::ostringstream out;
  write_bench_csv(out, rows);
  EXPECT_EQ(out.str().rfind("sketch,d,n,D,k,reps,forward_median_s,forward_vjp_median_s\r\nrm,3,4,8,5,1,", 0), 0u);
}

TEST(Gradcheck, LinearProbeIsExactAtLargeStep) {
  GradcheckOptions opts;
  opts.function = GradFunction::kLinear;
  opts.eps = 1e-3;
  const auto r = run_gradcheck(random_matrix(4, 3, 9), opts);
  EXPECT_LE(r.max_rel_err, 1e-10);
  EXPECT_TRUE(r.within_tol);
}

TEST(Report, TimingIsSeparateMember) {
  const Json payload = {{"a", 1}};
  const Json parsed = Json::parse(render_report(payload, {{"wall_seconds", 0.5}}));
  EXPECT_EQ(parsed["a"], 1);
  EXPECT_EQ(parsed["timing"]["wall_seconds"], 0.5);
}

}  // namespace
}  // namespace ipccp::harness
