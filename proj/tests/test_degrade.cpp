#include "rtc/degrade.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace rtc;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double normal_cdf(double x, double sigma) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); }

constexpr std::size_t kDraws = 1'000'000;

}  // namespace

TEST(Seeds, SplitmixIsDeterministicAndSpreads) {
  EXPECT_EQ(splitmix64(0), splitmix64(0));
  EXPECT_NE(splitmix64(0), splitmix64(1));
  EXPECT_NE(derive_seed(7, seed_tags::kMask), derive_seed(7, seed_tags::kNoise));
  EXPECT_NE(derive_seed(7, seed_tags::kMask), derive_seed(8, seed_tags::kMask));
}

TEST(Sampler, LaplaceMoments) {
  const auto v = sample_laplace(3.0, kDraws, 1);
  EXPECT_NEAR(mean(v), 0.0, 0.05);
  EXPECT_NEAR(variance(v), 18.0, 0.5);
}

TEST(Sampler, GaussianMomentsAndTail) {
  const auto v = sample_gaussian(3.0, kDraws, 2);
  EXPECT_NEAR(mean(v), 0.0, 0.05);
  EXPECT_NEAR(variance(v), 9.0, 0.3);
  const auto tail = std::count_if(v.begin(), v.end(), [](double x) { return std::abs(x) > 1.959964 * 3.0; });
  EXPECT_NEAR(static_cast<double>(tail) / kDraws, 0.05, 0.003);
}

TEST(Sampler, CompositeVarianceAndGaussianLimit) {
  const auto v = sample_composite(2.0, 2.0, kDraws, 3);
  EXPECT_NEAR(mean(v), 0.0, 0.05);
  EXPECT_NEAR(variance(v), 12.0, 0.4);
  EXPECT_DOUBLE_EQ(NoiseSpec::composite(2.0, 2.0).variance(), 12.0);

  // a vanishing Laplace part leaves a Gaussian: Kolmogorov-Smirnov distance
  auto g = sample_composite(1e-6, 1.0, kDraws, 4);
  std::sort(g.begin(), g.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double f = normal_cdf(g[i], 1.0);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / kDraws), std::abs(f - static_cast<double>(i + 1) / kDraws)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(Sampler, SeedDeterminismAndValidation) {
  EXPECT_EQ(sample_laplace(1.0, 100, 9), sample_laplace(1.0, 100, 9));
  EXPECT_NE(sample_laplace(1.0, 100, 9), sample_laplace(1.0, 100, 10));
  EXPECT_THROW(sample_laplace(0.0, 10, 1), std::invalid_argument);
  EXPECT_THROW(sample_gaussian(-1.0, 10, 1), std::invalid_argument);
  EXPECT_THROW(sample_noise(NoiseSpec::composite(1.0, 0.0), 10), std::invalid_argument);
}

TEST(Presets, Values) {
  EXPECT_FALSE(noise_preset("none"));
  EXPECT_EQ(noise_preset("ln1")->b, 3.0);
  EXPECT_EQ(noise_preset("ln2")->b, 5.0);
  EXPECT_EQ(noise_preset("gn1")->sigma, 3.0);
  EXPECT_EQ(noise_preset("gn2")->sigma, 5.0);
  EXPECT_EQ(noise_preset("cn1")->kind, NoiseKind::Composite);
  EXPECT_DOUBLE_EQ(noise_preset("cn2")->variance(), 27.0);
  EXPECT_THROW(noise_preset("ln3"), std::invalid_argument);
}

TEST(Masks, RandomRate) {
  const auto m = make_mask_rm({100, 100, 10}, 0.5, 5);
  EXPECT_NEAR(m.observation_rate(), 0.5, 0.01);
  EXPECT_EQ(make_mask_rm({10, 10, 10}, 0.0, 1).observed_count(), 1000u);
  EXPECT_THROW(make_mask_rm({2, 2, 2}, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(make_mask_rm({2, 2, 2}, -0.1, 1), std::invalid_argument);
}

TEST(Masks, FiberExactness) {
  const Dims d{10, 20, 6};
  const auto m = make_mask_nm(d, 0.5, 7);
  std::size_t dropped = 0;
  for (std::size_t k = 0; k < d.n3; ++k)
    for (std::size_t i = 0; i < d.n1; ++i) {
      std::size_t seen = 0;
      for (std::size_t j = 0; j < d.n2; ++j) seen += m(i, j, k) ? 1 : 0;
      ASSERT_TRUE(seen == 0 || seen == d.n2);  // whole fibers only
      if (seen == 0) ++dropped;
    }
  EXPECT_EQ(dropped, 30u);
  EXPECT_EQ(make_mask_nm(d, 0.25, 7).observed_count(), (60u - 15u) * 20u);
}

TEST(Scenario, Parsing) {
  auto s = parse_scenario("rm:0.3+gn2", 4);
  EXPECT_EQ(s.missing.kind, MissingKind::Random);
  EXPECT_DOUBLE_EQ(s.missing.rate, 0.3);
  ASSERT_TRUE(s.noise);
  EXPECT_EQ(s.noise->sigma, 5.0);
  EXPECT_EQ(s.label, "rm:0.3+gn2");
  s = parse_scenario("nm:0.7");
  EXPECT_EQ(s.missing.kind, MissingKind::Fiber);
  EXPECT_FALSE(s.noise);
  EXPECT_FALSE(parse_scenario("rm:0.1+none").noise);
  for (const char* bad : {"rm", "xm:0.3", "rm:abc", "rm:0.3x", "rm:1.0", "rm:0.2+zz"})
    EXPECT_THROW(parse_scenario(bad), std::invalid_argument) << bad;
}

TEST(Scenario, ReseedSeparatesStreams) {
  const auto a = parse_scenario("rm:0.5+ln1", 1);
  const auto b = parse_scenario("rm:0.5+ln1", 2);
  EXPECT_NE(a.missing.seed, b.missing.seed);
  EXPECT_NE(a.missing.seed, a.noise->seed);
}

TEST(Corrupt, Properties) {
  const Dims d{8, 9, 7};
  Tensor3 x0(d);
  for (std::size_t k = 0; k < x0.size(); ++k) x0[k] = static_cast<double>(k % 13);
  const auto c = corrupt(x0, parse_scenario("rm:0.4+cn1", 3));
  std::set<double> distinct;
  for (std::size_t k = 0; k < x0.size(); ++k) {
    if (c.mask[k]) {
      EXPECT_DOUBLE_EQ(c.y[k], x0[k] + c.e0[k]);
      distinct.insert(c.e0[k]);
    } else {
      EXPECT_EQ(c.y[k], 0.0);
      EXPECT_EQ(c.e0[k], 0.0);
    }
  }
  EXPECT_EQ(distinct.size(), c.mask.observed_count());

  const auto clean = corrupt(x0, parse_scenario("rm:0.4", 3));
  EXPECT_TRUE(clean.e0.vec().isZero());
  EXPECT_EQ(clean.y, project(x0, clean.mask));
}

TEST(Corrupt, Determinism) {
  const Tensor3 x0({5, 6, 4}, 1.0);
  const auto a = corrupt(x0, parse_scenario("nm:0.5+ln2", 11));
  const auto b = corrupt(x0, parse_scenario("nm:0.5+ln2", 11));
  const auto c = corrupt(x0, parse_scenario("nm:0.5+ln2", 12));
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
}
