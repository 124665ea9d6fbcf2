#include "rtc/eval.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rtc;
using testing_support::random_mask;
using testing_support::random_tensor;

TEST(Metrics, HandExamples) {
  const Tensor3 a({3, 1, 1}, std::vector<double>{1, 2, 3});
  const Tensor3 b({3, 1, 1}, std::vector<double>{2, 2, 5});
  EXPECT_DOUBLE_EQ(mae(a, b), 1.0);
  EXPECT_DOUBLE_EQ(rmse(a, b), std::sqrt(5.0 / 3.0));
  const Tensor3 z({2, 1, 1}, std::vector<double>{0, 0});
  const Tensor3 w({2, 1, 1}, std::vector<double>{3, 4});
  EXPECT_DOUBLE_EQ(rmse(z, w), std::sqrt(12.5));
  EXPECT_DOUBLE_EQ(mae(z, w), 3.5);
  EXPECT_EQ(mae(a, a), 0.0);
}

TEST(Metrics, OrderingAndSymmetry) {
  for (std::uint32_t s = 0; s < 20; ++s) {
    const Tensor3 a = random_tensor({4, 5, 3}, s);
    const Tensor3 b = random_tensor({4, 5, 3}, s + 100, 2.0);
    EXPECT_LE(mae(a, b), rmse(a, b) + 1e-15);
    EXPECT_DOUBLE_EQ(mae(a, b), mae(b, a));
    EXPECT_DOUBLE_EQ(rmse(a, b), rmse(b, a));
  }
}

TEST(Metrics, ScopesPartitionTheEntries) {
  const Dims d{6, 7, 4};
  const Tensor3 a = random_tensor(d, 1);
  const Tensor3 b = random_tensor(d, 2);
  const auto m = random_mask(d, 0.4, 3);
  const double no = static_cast<double>(m.observed_count());
  const double nm = static_cast<double>(d.size()) - no;
  const double n = static_cast<double>(d.size());
  const double mae_o = mae(a, b, MetricScope::ObservedOnly, &m);
  const double mae_m = mae(a, b, MetricScope::MissingOnly, &m);
  EXPECT_NEAR(mae(a, b), (no * mae_o + nm * mae_m) / n, 1e-14);
  const double r_o = rmse(a, b, MetricScope::ObservedOnly, &m);
  const double r_m = rmse(a, b, MetricScope::MissingOnly, &m);
  EXPECT_NEAR(rmse(a, b) * rmse(a, b), (no * r_o * r_o + nm * r_m * r_m) / n, 1e-13);
}

TEST(Metrics, Errors) {
  const Dims d{2, 2, 2};
  const Tensor3 a(d), b(d);
  const ObservationMask full(d, true);
  EXPECT_THROW(mae(a, b, MetricScope::MissingOnly, &full), std::invalid_argument);
  EXPECT_THROW(rmse(a, b, MetricScope::ObservedOnly, nullptr), std::invalid_argument);
  EXPECT_THROW(mae(a, Tensor3({2, 2, 3})), ShapeError);
  EXPECT_EQ(parse_scope("missing"), MetricScope::MissingOnly);
  EXPECT_EQ(parse_scope("all"), MetricScope::AllEntries);
  EXPECT_EQ(parse_scope("observed"), MetricScope::ObservedOnly);
  EXPECT_THROW(parse_scope("some"), std::invalid_argument);
}

TEST(ResidualSlice, MatchesEntries) {
  const Dims d{3, 4, 5};
  const Tensor3 a = random_tensor(d, 4);
  const Tensor3 b = random_tensor(d, 5);
  const Eigen::MatrixXd r = residual_slice(a, b, 2);
  ASSERT_EQ(r.rows(), 3);
  ASSERT_EQ(r.cols(), 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_EQ(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), a(i, j, 2) - b(i, j, 2));
  EXPECT_THROW(residual_slice(a, b, 5), std::out_of_range);
}

TEST(SandwichSweep, SmallSweepHolds) {
  const Dims d{6, 8, 5};
  const GradientOperator op(8);
  const auto s = lemma1_sweep(40, d, 3, op);
  EXPECT_EQ(s.rows.size(), 40u);
  EXPECT_EQ(s.passed, 40u);
  EXPECT_DOUBLE_EQ(s.pass_rate(), 1.0);
  for (const auto& r : s.rows) {
    EXPECT_TRUE(r.holds);
    EXPECT_GE(r.max_rank, 1u);
    EXPECT_GT(r.tv, 0.0);
  }
  EXPECT_THROW(lemma1_sweep(0, d, 3, op), std::invalid_argument);
}
