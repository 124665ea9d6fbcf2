/*
 * degrade.hpp
 *
 * Ground-truth corruption: Laplace / Gaussian / composite noise samplers,
 * random (RM) and fiber (NM) missing masks, and Y = P(X0 + E0).
 *
 * Random streams come from std::mt19937_64. Uniforms use the top 53 bits
 * mapped to the open interval (0, 1); Laplace draws use the inverse CDF and
 * Gaussian draws use Box-Muller, so a stream is fully determined by its seed.
 * Sub-streams are keyed with splitmix64(seed ^ tag).
 */
#pragma once

#include "rtc/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag)); }

namespace seed_tags {
inline constexpr std::uint64_t kMask = 0x6d61736bULL;       // "mask"
inline constexpr std::uint64_t kNoise = 0x6e6f6973ULL;      // "nois"
inline constexpr std::uint64_t kGaussian = 0x67617573ULL;   // "gaus"
inline constexpr std::uint64_t kLaplace = 0x6c61706cULL;    // "lapl"
}  // namespace seed_tags

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Unbiased integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do v = engine_();
    while (v >= limit);
    return v % n;
  }

  double laplace(double b) {
    const double u = uniform() - 0.5;
    return u < 0.0 ? b * std::log1p(2.0 * u) : -b * std::log1p(-2.0 * u);
  }

  double gaussian(double sigma) {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return sigma * v;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    return sigma * r * std::cos(phi);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class NoiseKind { Laplace, Gaussian, Composite };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Laplace;
  double b = 3.0;      // Laplace scale
  double sigma = 3.0;  // Gaussian standard deviation
  std::uint64_t seed = 0;

  static NoiseSpec laplace(double b, std::uint64_t seed = 0) { return {NoiseKind::Laplace, b, 0.0, seed}; }
  static NoiseSpec gaussian(double sigma, std::uint64_t seed = 0) {
    return {NoiseKind::Gaussian, 0.0, sigma, seed};
  }
  static NoiseSpec composite(double b, double sigma, std::uint64_t seed = 0) {
    return {NoiseKind::Composite, b, sigma, seed};
  }

  void validate() const {
    if (kind != NoiseKind::Gaussian && !(b > 0.0)) throw std::invalid_argument("Laplace scale b must be > 0");
    if (kind != NoiseKind::Laplace && !(sigma > 0.0))
      throw std::invalid_argument("Gaussian sigma must be > 0");
  }

  // Closed-form variance of one draw.
  double variance() const {
    switch (kind) {
      case NoiseKind::Laplace: return 2.0 * b * b;
      case NoiseKind::Gaussian: return sigma * sigma;
      case NoiseKind::Composite: return 2.0 * b * b + sigma * sigma;
    }
    return 0.0;
  }
};

// Named presets: ln1 (b=3), ln2 (b=5), gn1 (sigma=3), gn2 (sigma=5),
// cn1 (b=2, sigma=2), cn2 (b=3, sigma=3). "none" yields nullopt.
inline std::optional<NoiseSpec> noise_preset(const std::string& name) {
  if (name == "none") return std::nullopt;
  if (name == "ln1") return NoiseSpec::laplace(3.0);
  if (name == "ln2") return NoiseSpec::laplace(5.0);
  if (name == "gn1") return NoiseSpec::gaussian(3.0);
  if (name == "gn2") return NoiseSpec::gaussian(5.0);
  if (name == "cn1") return NoiseSpec::composite(2.0, 2.0);
  if (name == "cn2") return NoiseSpec::composite(3.0, 3.0);
  throw std::invalid_argument("unknown noise preset '" + name + "'");
}

inline std::vector<double> sample_laplace(double b, std::size_t count, std::uint64_t seed) {
  if (!(b > 0.0)) throw std::invalid_argument("Laplace scale b must be > 0");
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& v : out) v = rng.laplace(b);
  return out;
}

inline std::vector<double> sample_gaussian(double sigma, std::size_t count, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw std::invalid_argument("Gaussian sigma must be > 0");
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& v : out) v = rng.gaussian(sigma);
  return out;
}

// Sum of independent Gaussian and Laplace streams.
inline std::vector<double> sample_composite(double b, double sigma, std::size_t count, std::uint64_t seed) {
  auto out = sample_gaussian(sigma, count, derive_seed(seed, seed_tags::kGaussian));
  const auto lap = sample_laplace(b, count, derive_seed(seed, seed_tags::kLaplace));
  for (std::size_t i = 0; i < count; ++i) out[i] += lap[i];
  return out;
}

inline std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t count) {
  spec.validate();
  switch (spec.kind) {
    case NoiseKind::Laplace: return sample_laplace(spec.b, count, spec.seed);
    case NoiseKind::Gaussian: return sample_gaussian(spec.sigma, count, spec.seed);
    case NoiseKind::Composite: return sample_composite(spec.b, spec.sigma, count, spec.seed);
  }
  return {};
}

enum class MissingKind { Random, Fiber };

struct MissingSpec {
  MissingKind kind = MissingKind::Random;
  double rate = 0.5;  // missing rate
  std::uint64_t seed = 0;
};

inline void check_missing_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("missing rate must lie in [0, 1)");
}

// Each entry is observed independently with probability 1 - missing_rate.
inline ObservationMask make_mask_rm(const Dims& dims, double missing_rate, std::uint64_t seed) {
  check_missing_rate(missing_rate);
  ObservationMask mask(dims);
  Rng rng(seed);
  for (std::size_t k = 0; k < mask.size(); ++k) mask.set(k, rng.uniform() >= missing_rate);
  return mask;
}

// floor(rate * n1 * n3) (location, day) fibers, drawn uniformly without
// replacement, lose every time point.
inline ObservationMask make_mask_nm(const Dims& dims, double missing_rate, std::uint64_t seed) {
  check_missing_rate(missing_rate);
  ObservationMask mask(dims);
  const std::size_t fibers = dims.n1 * dims.n3;
  const auto drop = static_cast<std::size_t>(std::floor(missing_rate * static_cast<double>(fibers)));
  std::vector<std::size_t> order(fibers);
  for (std::size_t f = 0; f < fibers; ++f) order[f] = f;
  Rng rng(seed);
  for (std::size_t f = 0; f < drop; ++f) {
    const std::size_t pick = f + static_cast<std::size_t>(rng.index(fibers - f));
    std::swap(order[f], order[pick]);
    const std::size_t i1 = order[f] % dims.n1;
    const std::size_t i3 = order[f] / dims.n1;
    for (std::size_t i2 = 0; i2 < dims.n2; ++i2) mask.set(i1, i2, i3, false);
  }
  return mask;
}

inline ObservationMask make_mask(const Dims& dims, const MissingSpec& spec) {
  return spec.kind == MissingKind::Random ? make_mask_rm(dims, spec.rate, spec.seed)
                                          : make_mask_nm(dims, spec.rate, spec.seed);
}

struct DegradationScenario {
  MissingSpec missing;
  std::optional<NoiseSpec> noise;  // applied to observed entries only
  std::string label;               // scenario string it was parsed from, if any

  // Derives independent mask and noise seeds from one master seed.
  DegradationScenario& reseed(std::uint64_t seed) {
    missing.seed = derive_seed(seed, seed_tags::kMask);
    if (noise) noise->seed = derive_seed(seed, seed_tags::kNoise);
    return *this;
  }
};

// Grammar: rm:<rate>[+<preset>] | nm:<rate>[+<preset>],
// preset in {ln1, ln2, gn1, gn2, cn1, cn2, none}.
inline DegradationScenario parse_scenario(const std::string& text, std::uint64_t seed = 0) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("scenario '" + text + "': expected rm:<rate> or nm:<rate>");
  const std::string kind = text.substr(0, colon);
  const auto plus = text.find('+', colon);
  const std::string rate_text = text.substr(colon + 1, plus == std::string::npos ? std::string::npos : plus - colon - 1);
  DegradationScenario sc;
  sc.label = text;
  if (kind == "rm") sc.missing.kind = MissingKind::Random;
  else if (kind == "nm") sc.missing.kind = MissingKind::Fiber;
  else throw std::invalid_argument("scenario '" + text + "': unknown missing pattern '" + kind + "'");
  std::size_t used = 0;
  try {
    sc.missing.rate = std::stod(rate_text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("scenario '" + text + "': bad rate '" + rate_text + "'");
  }
  if (used != rate_text.size()) throw std::invalid_argument("scenario '" + text + "': bad rate '" + rate_text + "'");
  check_missing_rate(sc.missing.rate);
  if (plus != std::string::npos) sc.noise = noise_preset(text.substr(plus + 1));
  return sc.reseed(seed);
}

struct Corruption {
  Tensor3 y;  // P(X0 + E0)
  ObservationMask mask;
  Tensor3 e0;  // zero off the sampling set
};

inline Corruption corrupt(const Tensor3& x0, const DegradationScenario& scenario) {
  const Dims& d = x0.dims();
  Corruption out{Tensor3(d), make_mask(d, scenario.missing), Tensor3(d)};
  if (scenario.noise) {
    const auto draws = sample_noise(*scenario.noise, out.mask.observed_count());
    std::size_t next = 0;
    for (std::size_t k = 0; k < x0.size(); ++k)
      if (out.mask[k]) out.e0[k] = draws[next++];
  }
  for (std::size_t k = 0; k < x0.size(); ++k)
    if (out.mask[k]) out.y[k] = x0[k] + out.e0[k];
  return out;
}

}  // namespace rtc
