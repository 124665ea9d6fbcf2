#include "rtc/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rtc;

TEST(Synthetic, RangeAndShape) {
  const auto x = make_synthetic({});
  EXPECT_EQ(x.dims(), (Dims{40, 60, 14}));
  EXPECT_DOUBLE_EQ(x.vec().minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(x.vec().maxCoeff(), 70.0);
}

TEST(Synthetic, Determinism) {
  SyntheticSpec a;
  a.dims = {5, 12, 7};
  a.seed = 4;
  SyntheticSpec b = a;
  b.seed = 5;
  EXPECT_EQ(make_synthetic(a), make_synthetic(a));
  EXPECT_NE(make_synthetic(a), make_synthetic(b));
}

// The base component is flat in time; the affine rescale keeps it flat.
TEST(Synthetic, SingleComponentIsConstantInTime) {
  SyntheticSpec s;
  s.dims = {5, 12, 7};
  s.components = 1;
  const auto x = make_synthetic(s);
  for (std::size_t k = 0; k < 7; ++k)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 1; j < 12; ++j) EXPECT_NEAR(x(i, j, k), x(i, 0, k), 1e-12);
}

TEST(Synthetic, DipsMakeTimeProfilesVary) {
  SyntheticSpec s;
  s.dims = {5, 12, 7};
  const auto x = make_synthetic(s);
  double spread = 0.0;
  for (std::size_t j = 1; j < 12; ++j) spread = std::max(spread, std::abs(x(0, j, 0) - x(0, 0, 0)));
  EXPECT_GT(spread, 0.0);
}

TEST(Synthetic, Validation) {
  SyntheticSpec s;
  s.components = 0;
  EXPECT_THROW(make_synthetic(s), std::invalid_argument);
  s = {};
  s.max_value = 0.0;
  EXPECT_THROW(make_synthetic(s), std::invalid_argument);
  s = {};
  s.bump_width = -1.0;
  EXPECT_THROW(make_synthetic(s), std::invalid_argument);
}
