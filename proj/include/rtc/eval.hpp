/*
 * eval.hpp
 *
 * Recovery metrics, residual slices, and the empirical sweep of the
 * GTNLN / TV sandwich bound.
 */
#pragma once

#include "rtc/regularizers.hpp"
#include "rtc/synthetic.hpp"
#include "rtc/tensor.hpp"
#include "rtc/transforms.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtc {

enum class MetricScope { AllEntries, MissingOnly, ObservedOnly };

inline MetricScope parse_scope(const std::string& s) {
  if (s == "all") return MetricScope::AllEntries;
  if (s == "missing") return MetricScope::MissingOnly;
  if (s == "observed") return MetricScope::ObservedOnly;
  throw std::invalid_argument("unknown metric scope '" + s + "' (expected all|missing|observed)");
}

namespace detail {

// Calls f(diff) on every entry of x0 - xhat inside the scope; returns the entry count.
template <typename F>
std::size_t for_scope(const Tensor3& x0, const Tensor3& xhat, MetricScope scope, const ObservationMask* mask,
                      F&& f) {
  require_same_dims(x0.dims(), xhat.dims(), "metric");
  if (scope != MetricScope::AllEntries) {
    if (!mask) throw std::invalid_argument("metric scope needs an observation mask");
    require_same_dims(x0.dims(), mask->dims(), "metric mask");
  }
  std::size_t count = 0;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    if (scope == MetricScope::MissingOnly && (*mask)[k]) continue;
    if (scope == MetricScope::ObservedOnly && !(*mask)[k]) continue;
    f(x0[k] - xhat[k]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("metric scope selects no entries");
  return count;
}

}  // namespace detail

// Mean absolute error; the default scope averages over all n1*n2*n3 entries.
inline double mae(const Tensor3& x0, const Tensor3& xhat, MetricScope scope = MetricScope::AllEntries,
                  const ObservationMask* mask = nullptr) {
  double sum = 0.0;
  const auto n = detail::for_scope(x0, xhat, scope, mask, [&](double d) { sum += std::abs(d); });
  return sum / static_cast<double>(n);
}

inline double rmse(const Tensor3& x0, const Tensor3& xhat, MetricScope scope = MetricScope::AllEntries,
                   const ObservationMask* mask = nullptr) {
  double sum = 0.0;
  const auto n = detail::for_scope(x0, xhat, scope, mask, [&](double d) { sum += d * d; });
  return std::sqrt(sum / static_cast<double>(n));
}

// x0[:, :, day] - xhat[:, :, day] as an n1 x n2 matrix (day is 0-based).
inline Eigen::MatrixXd residual_slice(const Tensor3& x0, const Tensor3& xhat, std::size_t day) {
  require_same_dims(x0.dims(), xhat.dims(), "residual_slice");
  if (day >= x0.dims().n3)
    throw std::out_of_range("residual_slice: day " + std::to_string(day) + " outside [0, " +
                            std::to_string(x0.dims().n3) + ")");
  return x0.slice(day) - xhat.slice(day);
}

struct Lemma1Sweep {
  std::vector<Lemma1Check> rows;
  std::size_t passed = 0;
  std::size_t flagged = 0;  // rows carrying the rank-tolerance note
  double pass_rate() const { return rows.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(rows.size()); }
};

// check_lemma1 on `trials` random smooth low-rank tensors (2..4 components,
// so the temporal gradient never vanishes).
inline Lemma1Sweep lemma1_sweep(std::size_t trials, const Dims& dims, std::uint64_t seed,
                                const GradientOperator& op, const ModeWeights& w = {}) {
  if (trials < 1) throw std::invalid_argument("lemma1_sweep needs at least one trial");
  Lemma1Sweep out;
  out.rows.reserve(trials);
  Rng picker(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    SyntheticSpec spec;
    spec.dims = dims;
    spec.components = 2 + static_cast<int>(picker.index(3));
    spec.weekly = false;
    spec.seed = derive_seed(seed, t + 1);
    const auto check = check_lemma1(make_synthetic(spec), op, w);
    if (check.holds) ++out.passed;
    if (check.rank_tolerance_note) ++out.flagged;
    out.rows.push_back(check);
  }
  return out;
}

}  // namespace rtc
