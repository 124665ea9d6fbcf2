// Shared helpers for the test suite. Random data here comes from std::mt19937
// so fixtures never depend on the library's own generators.
#pragma once

#include "rtc/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace testing_support {

inline rtc::Tensor3 random_tensor(const rtc::Dims& d, std::uint32_t seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  rtc::Tensor3 t(d);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = nd(gen);
  return t;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(gen);
  return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(gen);
  return v;
}

// a o b o c
inline rtc::Tensor3 outer(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  rtc::Tensor3 t({static_cast<std::size_t>(a.size()), static_cast<std::size_t>(b.size()),
                  static_cast<std::size_t>(c.size())});
  for (Eigen::Index k = 0; k < c.size(); ++k)
    for (Eigen::Index j = 0; j < b.size(); ++j)
      for (Eigen::Index i = 0; i < a.size(); ++i)
        t(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k)) = a(i) * b(j) * c(k);
  return t;
}

inline rtc::ObservationMask random_mask(const rtc::Dims& d, double keep, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::bernoulli_distribution b(keep);
  rtc::ObservationMask m(d, false);
  for (std::size_t k = 0; k < m.size(); ++k) m.set(k, b(gen));
  return m;
}

inline double rel_err(const rtc::Tensor3& a, const rtc::Tensor3& b) {
  const double base = b.vec().norm();
  return (a.vec() - b.vec()).norm() / (base > 0 ? base : 1.0);
}

// Explicit cyclic difference matrix, built independently of GradientOperator.
inline Eigen::MatrixXd cyclic_difference(Eigen::Index n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j, j) = -1.0;
    d(j, (j + 1) % n) += 1.0;
  }
  return d;
}

// Oracle: per time fiber, a dense LU solve of (I + D^T D) x = w.
inline rtc::Tensor3 dense_fiber_solve(const rtc::Tensor3& w) {
  const auto [n1, n2, n3] = w.dims();
  const Eigen::MatrixXd d = cyclic_difference(static_cast<Eigen::Index>(n2));
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(d.rows(), d.cols()) + d.transpose() * d;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
  rtc::Tensor3 x(w.dims());
  Eigen::VectorXd fiber(static_cast<Eigen::Index>(n2));
  for (std::size_t k = 0; k < n3; ++k)
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) fiber(static_cast<Eigen::Index>(j)) = w(i, j, k);
      const Eigen::VectorXd sol = lu.solve(fiber);
      for (std::size_t j = 0; j < n2; ++j) x(i, j, k) = sol(static_cast<Eigen::Index>(j));
    }
  return x;
}

}  // namespace testing_support
