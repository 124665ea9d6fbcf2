#include "rtc/tensor.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rtc;
using testing_support::random_matrix;
using testing_support::random_tensor;

TEST(Tensor, StorageIsFirstIndexFastest) {
  Tensor3 t({2, 3, 4});
  t(1, 2, 3) = 5.0;
  EXPECT_EQ(t[1 + 2 * (2 + 3 * 3)], 5.0);
  EXPECT_EQ(t.size(), 24u);
}

TEST(Tensor, RejectsZeroDimsAndBadBuffer) {
  EXPECT_THROW(Tensor3({0, 2, 2}), ShapeError);
  EXPECT_THROW(Tensor3({2, 2, 2}, std::vector<double>(7)), ShapeError);
}

TEST(Unfold, Mode1HandExample) {
  // value 100*i1 + 10*i2 + i3 with 1-based indices
  Tensor3 t({2, 2, 2});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) t(i, j, k) = 100.0 * (i + 1) + 10.0 * (j + 1) + (k + 1);
  const Eigen::MatrixXd m = unfold(t, 1).values;
  Eigen::MatrixXd expected(2, 4);
  expected << 111, 121, 112, 122, 211, 221, 212, 222;
  EXPECT_EQ(m, expected);
}

TEST(Unfold, Mode2And3ColumnOrder) {
  Tensor3 t({2, 3, 2});
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k);
  const Eigen::MatrixXd m2 = unfold_matrix(t, 2);
  const Eigen::MatrixXd m3 = unfold_matrix(t, 3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(m2(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i + 2 * k)), t(i, j, k));
        EXPECT_EQ(m3(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i + 2 * j)), t(i, j, k));
      }
}

TEST(Unfold, ZeroTensorGivesZeroMatrixOfRightShape) {
  const Tensor3 t({3, 4, 5});
  for (int mode = 1; mode <= 3; ++mode) {
    const auto m = unfold(t, mode);
    EXPECT_EQ(m.mode, mode);
    EXPECT_EQ(static_cast<std::size_t>(m.values.rows()), t.dims()[mode]);
    EXPECT_EQ(static_cast<std::size_t>(m.values.cols()), t.size() / t.dims()[mode]);
    EXPECT_TRUE(m.values.isZero());
  }
}

TEST(Unfold, InvalidModeThrows) {
  const Tensor3 t({2, 2, 2});
  EXPECT_THROW(unfold(t, 0), std::invalid_argument);
  EXPECT_THROW(unfold(t, 4), std::invalid_argument);
}

TEST(Fold, HandExample) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 3, 2, 4;
  const Tensor3 t = fold(m, 1, {2, 2, 1});
  EXPECT_EQ(t(0, 0, 0), 1);
  EXPECT_EQ(t(0, 1, 0), 3);
  EXPECT_EQ(t(1, 0, 0), 2);
  EXPECT_EQ(t(1, 1, 0), 4);
}

TEST(Fold, WrongShapeThrows) {
  EXPECT_THROW(fold(Eigen::MatrixXd::Zero(2, 3), 1, {2, 2, 1}), ShapeError);
  EXPECT_THROW(fold(Eigen::MatrixXd::Zero(3, 2), 1, {2, 2, 1}), ShapeError);
}

TEST(Fold, RoundTripsOnRandomDims) {
  std::mt19937 gen(11);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  for (int trial = 0; trial < 40; ++trial) {
    const Dims d{std::min<std::size_t>(dim(gen), 7), std::min<std::size_t>(dim(gen), 8), dim(gen)};
    const Tensor3 t = random_tensor(d, 100 + trial);
    for (int mode = 1; mode <= 3; ++mode) {
      EXPECT_EQ(fold(unfold(t, mode), d).vec(), t.vec());
      const Eigen::MatrixXd m = random_matrix(static_cast<Eigen::Index>(d[mode]),
                                              static_cast<Eigen::Index>(d.size() / d[mode]), 500 + trial);
      EXPECT_EQ(unfold_matrix(fold(m, mode, d), mode), m);
      // Frobenius norm is shared by every unfolding
      EXPECT_NEAR(unfold_matrix(t, mode).norm(), frobenius(t), 1e-12 * frobenius(t));
    }
  }
}

TEST(Mode2Product, MatchesNaiveTripleLoop) {
  const Tensor3 t = random_tensor({3, 4, 2}, 1);
  const Eigen::MatrixXd m = random_matrix(4, 4, 2);
  const Tensor3 got = mode2_product(t, m);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l < 4; ++l)
          s += m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) * t(i, l, k);
        EXPECT_NEAR(got(i, j, k), s, 1e-12);
      }
}

TEST(Mode2Product, IdentityZeroAndComposition) {
  const Tensor3 t = random_tensor({5, 6, 3}, 3);
  EXPECT_EQ(mode2_product(t, Eigen::MatrixXd::Identity(6, 6)).vec(), t.vec());
  EXPECT_TRUE(mode2_product(t, Eigen::MatrixXd::Zero(6, 6)).vec().isZero());
  const Eigen::MatrixXd a = random_matrix(6, 6, 4), b = random_matrix(6, 6, 5);
  const Tensor3 lhs = mode2_product(mode2_product(t, a), b);
  const Tensor3 rhs = mode2_product(t, b * a);
  EXPECT_LE(testing_support::rel_err(lhs, rhs), 1e-10);
}

TEST(Mode2Product, ShapeMismatchThrows) {
  const Tensor3 t({2, 3, 2});
  EXPECT_THROW(mode2_product(t, Eigen::MatrixXd::Identity(4, 4)), ShapeError);
  EXPECT_THROW(mode2_product(t, Eigen::MatrixXd::Zero(3, 2)), ShapeError);
}

TEST(Project, MasksAreRespected) {
  const Tensor3 t = random_tensor({4, 5, 3}, 7);
  EXPECT_EQ(project(t, ObservationMask(t.dims(), true)).vec(), t.vec());
  EXPECT_TRUE(project(t, ObservationMask(t.dims(), false)).vec().isZero());
  const auto mask = testing_support::random_mask(t.dims(), 0.4, 8);
  const Tensor3 p = project(t, mask);
  EXPECT_EQ(project(p, mask).vec(), p.vec());
  EXPECT_LE(frobenius(p), frobenius(t));
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(p[k], mask[k] ? t[k] : 0.0);
  EXPECT_THROW(project(t, ObservationMask({4, 5, 2})), ShapeError);
}

TEST(Mask, RateAndComplement) {
  ObservationMask m({2, 2, 2}, false);
  m.set(0, 1, 1, true);
  m.set(1, 0, 0, true);
  EXPECT_EQ(m.observed_count(), 2u);
  EXPECT_DOUBLE_EQ(m.observation_rate(), 0.25);
  const auto c = m.complement();
  EXPECT_EQ(c.observed_count(), 6u);
  EXPECT_FALSE(c(0, 1, 1));
}

TEST(Norms, HandExamples) {
  Tensor3 z({2, 2, 2});
  auto n = norms(z);
  EXPECT_EQ(n.l1, 0.0);
  EXPECT_EQ(n.fro, 0.0);
  EXPECT_EQ(n.linf, 0.0);
  z(1, 0, 1) = 3.0;
  n = norms(z);
  EXPECT_DOUBLE_EQ(n.l1, 3.0);
  EXPECT_DOUBLE_EQ(n.fro, 3.0);
  EXPECT_DOUBLE_EQ(n.linf, 3.0);
  n = norms(Tensor3({2, 2, 2}, 1.0));
  EXPECT_DOUBLE_EQ(n.l1, 8.0);
  EXPECT_DOUBLE_EQ(n.fro, std::sqrt(8.0));
}

TEST(Validation, NonFiniteRejected) {
  Tensor3 t({2, 2, 2});
  EXPECT_NO_THROW(validate_finite(t, "t"));
  t(1, 1, 1) = std::nan("");
  EXPECT_THROW(validate_finite(t, "t"), NonFiniteError);
  t(1, 1, 1) = INFINITY;
  EXPECT_THROW(validate_finite(t, "t"), NonFiniteError);
}
