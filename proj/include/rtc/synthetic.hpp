/*
 * synthetic.hpp
 *
 * Traffic-like synthetic ground truth built from rank-1 terms
 * location x time x day:
 *   - one base level per location and day, constant over the time axis;
 *   - (components - 1) congestion dips, each a smooth cyclic Gaussian bump
 *     in time, scaled per location and modulated across days (weekday /
 *     weekend pattern when `weekly` is set).
 * The sum is mapped affinely onto [0, max_value].
 */
#pragma once

#include "rtc/degrade.hpp"
#include "rtc/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rtc {

struct SyntheticSpec {
  Dims dims{40, 60, 14};
  int components = 4;
  double max_value = 70.0;
  double bump_width = 0.08;  // bump standard deviation as a fraction of n2 (randomized x0.5..1.5)
  bool weekly = true;
  std::uint64_t seed = 0;
};

inline Tensor3 make_synthetic(const SyntheticSpec& spec) {
  check_dims(spec.dims);
  if (spec.components < 1) throw std::invalid_argument("synthetic tensor needs at least one component");
  if (!(spec.max_value > 0.0)) throw std::invalid_argument("synthetic max_value must be > 0");
  if (!(spec.bump_width > 0.0)) throw std::invalid_argument("synthetic bump_width must be > 0");
  const auto [n1, n2, n3] = spec.dims;
  const double period = static_cast<double>(n2);
  Rng rng(spec.seed);
  Tensor3 x(spec.dims);
  std::vector<double> loc(n1), prof(n2), day(n3);
  for (int r = 0; r < spec.components; ++r) {
    const bool base = (r == 0);
    const double centre = rng.uniform() * period;
    const double width = spec.bump_width * period * (0.5 + rng.uniform());
    for (auto& v : loc) v = base ? 0.8 + 0.4 * rng.uniform() : -0.5 * rng.uniform();
    for (std::size_t j = 0; j < n2; ++j) {
      const double dj = std::remainder(static_cast<double>(j) - centre, period);
      prof[j] = base ? 1.0 : std::exp(-0.5 * dj * dj / (width * width));
    }
    for (std::size_t k = 0; k < n3; ++k) {
      if (base) day[k] = 0.9 + 0.2 * rng.uniform();
      else if (spec.weekly) day[k] = (k % 7) < 5 ? 0.7 + 0.6 * rng.uniform() : 0.2 * rng.uniform();
      else day[k] = 0.5 + rng.uniform();
    }
    for (std::size_t k = 0; k < n3; ++k)
      for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t i = 0; i < n1; ++i) x(i, j, k) += loc[i] * prof[j] * day[k];
  }
  const double lo = x.vec().minCoeff();
  const double hi = x.vec().maxCoeff();
  if (hi > lo) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - lo) * spec.max_value / (hi - lo);
  } else {
    x = Tensor3(spec.dims, spec.max_value);
  }
  return x;
}

}  // namespace rtc
