/*
 * bench.hpp
 *
 * Per-iteration ADMM timing over cubic tensors and a log-log slope fit.
 */
#pragma once

#include "rtc/degrade.hpp"
#include "rtc/solver.hpp"
#include "rtc/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rtc {

struct BenchPoint {
  std::size_t n = 0;
  double seconds_per_iter = 0.0;  // median over the timed iterations
};

struct BenchResult {
  std::vector<BenchPoint> points;
  double slope = 0.0;  // least-squares slope of log(time) against log(n)
};

// Ordinary least-squares slope of y on x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope needs >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: x values are all equal");
  return sxy / sxx;
}

// Times `iters` GTNLN iterations (after `warmup` untimed ones) on an n x n x n
// synthetic tensor with 50% random missing entries and Laplace noise.
inline BenchPoint bench_size(std::size_t n, int iters, int warmup, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("bench size must be >= 2");
  if (iters < 1 || warmup < 0) throw std::invalid_argument("bench needs iters >= 1 and warmup >= 0");
  SyntheticSpec spec;
  spec.dims = {n, n, n};
  spec.seed = seed;
  const Tensor3 x0 = make_synthetic(spec);
  const Corruption c = corrupt(x0, parse_scenario("rm:0.5+ln1", seed));
  const GradientOperator op(n);
  SolverConfig cfg;
  cfg.max_iters = iters + warmup;
  AdmmSolver solver(c.y, c.mask, cfg, op);
  for (int w = 0; w < warmup; ++w) solver.step();
  std::vector<double> times;
  for (int t = 0; t < iters; ++t) {
    const auto start = std::chrono::steady_clock::now();
    solver.step();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
  return {n, times[times.size() / 2]};
}

inline BenchResult bench_scaling(const std::vector<std::size_t>& sizes, int iters = 7, int warmup = 2,
                                 std::uint64_t seed = 0) {
  if (sizes.size() < 2) throw std::invalid_argument("bench needs at least two sizes");
  BenchResult r;
  std::vector<double> lx, ly;
  for (std::size_t n : sizes) {
    r.points.push_back(bench_size(n, iters, warmup, seed));
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(r.points.back().seconds_per_iter));
  }
  r.slope = fit_slope(lx, ly);
  return r;
}

}  // namespace rtc
