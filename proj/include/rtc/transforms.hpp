/*
 * transforms.hpp
 *
 * Temporal (mode-2) cyclic difference operator, its adjoint, and the
 * cached eigendecomposition of D^T D used to solve (a I + b D^T D) X = W.
 */
#pragma once

#include "rtc/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtc {

namespace detail {
inline std::atomic<std::size_t>& eigensolve_counter() {
  static std::atomic<std::size_t> count{0};
  return count;
}
}  // namespace detail

// Number of D^T D eigendecompositions performed by this process.
inline std::size_t eigensolve_count() { return detail::eigensolve_counter().load(); }

class GradientOperator {
 public:
  static constexpr double kEigenClamp = 1e-10;

  explicit GradientOperator(std::size_t n2) : n2_(n2) {
    if (n2 < 2) throw std::invalid_argument("gradient operator needs n2 >= 2, got " + std::to_string(n2));
    const auto n = static_cast<Eigen::Index>(n2);
    // Row j: -1 on the diagonal, +1 on the cyclic successor.
    d_ = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      d_(j, j) -= 1.0;
      d_(j, (j + 1) % n) += 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d_.transpose() * d_);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition of D^T D failed");
    ++detail::eigensolve_counter();
    eigenvectors_ = eig.eigenvectors();
    eigenvalues_ = eig.eigenvalues();
    for (Eigen::Index j = 0; j < n; ++j)
      if (eigenvalues_(j) < 0.0 && eigenvalues_(j) >= -kEigenClamp) eigenvalues_(j) = 0.0;
  }

  std::size_t n2() const { return n2_; }
  const Eigen::MatrixXd& d_matrix() const { return d_; }
  // Columns are orthonormal eigenvectors: D^T D A = A diag(s).
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double spectral_norm() const { return std::sqrt(eigenvalues_.maxCoeff()); }

  // t x_2 D: entry j of each time fiber becomes x_{j+1} - x_j, wrapping at the end.
  Tensor3 gradient(const Tensor3& t) const {
    check(t, "gradient");
    const auto [n1, n2, n3] = t.dims();
    Tensor3 out(t.dims());
    for (std::size_t k = 0; k < n3; ++k)
      for (std::size_t j = 0; j < n2; ++j) {
        const std::size_t next = (j + 1 == n2) ? 0 : j + 1;
        for (std::size_t i = 0; i < n1; ++i) out(i, j, k) = t(i, next, k) - t(i, j, k);
      }
    return out;
  }

  // t x_2 D^T: entry j becomes y_{j-1} - y_j, wrapping at the start.
  Tensor3 gradient_adjoint(const Tensor3& t) const {
    check(t, "gradient_adjoint");
    const auto [n1, n2, n3] = t.dims();
    Tensor3 out(t.dims());
    for (std::size_t k = 0; k < n3; ++k)
      for (std::size_t j = 0; j < n2; ++j) {
        const std::size_t prev = (j == 0) ? n2 - 1 : j - 1;
        for (std::size_t i = 0; i < n1; ++i) out(i, j, k) = t(i, prev, k) - t(i, j, k);
      }
    return out;
  }

  // Solves (shift I + scale D^T D) X = W along every time fiber through the
  // cached eigenbasis. Requires shift > 0 and scale >= 0.
  Tensor3 solve_shifted(const Tensor3& w, double shift, double scale) const {
    check(w, "solve_shifted");
    if (!(shift > 0.0) || scale < 0.0)
      throw std::invalid_argument("solve_shifted needs shift > 0 and scale >= 0");
    Tensor3 rotated = mode2_product(w, eigenvectors_.transpose());
    const auto [n1, n2, n3] = w.dims();
    for (std::size_t k = 0; k < n3; ++k)
      for (std::size_t j = 0; j < n2; ++j) {
        const double inv = 1.0 / (shift + scale * eigenvalues_(static_cast<Eigen::Index>(j)));
        for (std::size_t i = 0; i < n1; ++i) rotated(i, j, k) *= inv;
      }
    return mode2_product(rotated, eigenvectors_);
  }

  // Unique X with X + grad^T grad X = W.
  Tensor3 solve_identity_plus_laplacian(const Tensor3& w) const { return solve_shifted(w, 1.0, 1.0); }

 private:
  void check(const Tensor3& t, const char* what) const {
    if (t.dims().n2 != n2_)
      throw ShapeError(std::string(what) + ": tensor has n2=" + std::to_string(t.dims().n2) +
                       ", operator built for n2=" + std::to_string(n2_));
  }

  std::size_t n2_;
  Eigen::MatrixXd d_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;
};

inline GradientOperator build_gradient_operator(std::size_t n2) { return GradientOperator(n2); }

}  // namespace rtc
