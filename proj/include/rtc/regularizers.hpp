/*
 * regularizers.hpp
 *
 * Norm evaluators (tensor nuclear l1-l2, its gradient-domain version, the
 * convex weighted nuclear norm, temporal TV) and the proximal operators
 * behind the ADMM updates.
 */
#pragma once

#include "rtc/tensor.hpp"
#include "rtc/transforms.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rtc {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGradientError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Per-mode weights; nonnegative and summing to one.
class ModeWeights {
 public:
  ModeWeights() : alpha_{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0} {}
  ModeWeights(double a1, double a2, double a3) : alpha_{a1, a2, a3} {
    if (a1 < 0 || a2 < 0 || a3 < 0) throw std::invalid_argument("mode weights must be nonnegative");
    if (std::abs(a1 + a2 + a3 - 1.0) > 1e-12)
      throw std::invalid_argument("mode weights must sum to 1");
  }
  static ModeWeights uniform() { return {}; }

  double operator[](int mode) const { return alpha_[static_cast<std::size_t>(mode - 1)]; }
  const std::array<double, 3>& values() const { return alpha_; }

 private:
  std::array<double, 3> alpha_;
};

// Nonincreasing nonnegative singular values.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return {};
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed computing singular values");
  return svd.singularValues();
}

inline double soft_threshold(double x, double rho) {
  const double a = std::abs(x) - rho;
  return a > 0.0 ? std::copysign(a, x) : 0.0;
}

inline void check_rho(double rho, const char* what) {
  if (!(rho >= 0.0)) throw std::invalid_argument(std::string(what) + ": threshold must be >= 0");
}

inline Tensor3 soft_threshold(const Tensor3& t, double rho) {
  check_rho(rho, "soft_threshold");
  Tensor3 out(t.dims());
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = soft_threshold(t[k], rho);
  return out;
}

// rho * (|x|_1 - |x|_2) + 0.5 * |x - y|^2
inline double l1_minus_l2_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rho) {
  return rho * (x.lpNorm<1>() - x.norm()) + 0.5 * (x - y).squaredNorm();
}

// Global minimizer of rho*(|x|_1 - |x|_2) + 0.5*|x - y|^2.
//
// When |y|_inf > rho the minimizer is z * (|z| + rho) / |z| with z the soft
// threshold of y. Otherwise it is either zero or 1-sparse, carrying the first
// entry of maximal magnitude; both are evaluated and the cheaper one kept.
inline Eigen::VectorXd prox_l1_minus_l2(const Eigen::VectorXd& y, double rho) {
  check_rho(rho, "prox_l1_minus_l2");
  if (rho == 0.0 || y.size() == 0) return y;
  Eigen::Index imax = 0;
  const double ymax = y.cwiseAbs().maxCoeff(&imax);
  if (ymax > rho) {
    Eigen::VectorXd z = y.unaryExpr([rho](double v) { return soft_threshold(v, rho); });
    const double zn = z.norm();
    return z * ((zn + rho) / zn);
  }
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(y.size());
  if (ymax == 0.0) return zero;
  Eigen::VectorXd sparse = zero;
  sparse(imax) = y(imax);
  return l1_minus_l2_objective(sparse, y, rho) < l1_minus_l2_objective(zero, y, rho) ? sparse : zero;
}

namespace detail {

// U diag(f(sigma)) V^T over the thin SVD of m, keeping only nonzero outputs.
template <typename SpectrumMap>
Eigen::MatrixXd spectral_map(const Eigen::MatrixXd& m, SpectrumMap&& f) {
  if (m.size() == 0) return m;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw NumericalError("SVD failed on " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " matrix");
  const Eigen::VectorXd shrunk = f(svd.singularValues());
  Eigen::Index keep = 0;
  while (keep < shrunk.size() && shrunk(keep) > 0.0) ++keep;
  if (keep == 0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  return svd.matrixU().leftCols(keep) * shrunk.head(keep).asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

}  // namespace detail

// Matrix nuclear l1-l2 prox: U diag(prox_l1_minus_l2(sigma, rho)) V^T.
inline Eigen::MatrixXd prox_nuclear_l1l2(const Eigen::MatrixXd& m, double rho) {
  check_rho(rho, "prox_nuclear_l1l2");
  if (rho == 0.0) return m;
  return detail::spectral_map(m, [rho](const Eigen::VectorXd& s) { return prox_l1_minus_l2(s, rho); });
}

// Singular value soft threshold (prox of rho * nuclear norm).
inline Eigen::MatrixXd prox_nuclear(const Eigen::MatrixXd& m, double rho) {
  check_rho(rho, "prox_nuclear");
  if (rho == 0.0) return m;
  return detail::spectral_map(m, [rho](const Eigen::VectorXd& s) {
    return Eigen::VectorXd(s.unaryExpr([rho](double v) { return std::max(v - rho, 0.0); }));
  });
}

inline double nuclear_minus_frobenius(const Eigen::VectorXd& sigma) {
  return sigma.sum() - sigma.norm();
}

inline double tnln(const Tensor3& t, const ModeWeights& w = {}) {
  double total = 0.0;
  for (int mode = 1; mode <= 3; ++mode)
    total += w[mode] * nuclear_minus_frobenius(singular_values(unfold_matrix(t, mode)));
  return total;
}

inline double gtnln(const Tensor3& t, const GradientOperator& op, const ModeWeights& w = {}) {
  return tnln(op.gradient(t), w);
}

inline double convex_tnn(const Tensor3& t, const ModeWeights& w = {}) {
  double total = 0.0;
  for (int mode = 1; mode <= 3; ++mode) total += w[mode] * singular_values(unfold_matrix(t, mode)).sum();
  return total;
}

inline double tv(const Tensor3& t, const GradientOperator& op) { return frobenius(op.gradient(t)); }

inline std::size_t numerical_rank(const Eigen::VectorXd& sigma, double rel_tol = 1e-8) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  const double cut = rel_tol * sigma(0);
  std::size_t r = 0;
  while (r < static_cast<std::size_t>(sigma.size()) && sigma(static_cast<Eigen::Index>(r)) >= cut) ++r;
  return r;
}

// Weighted Tucker rank sum_i alpha_i rank(X_i) (diagnostic).
inline double weighted_tucker_rank(const Tensor3& t, const ModeWeights& w = {}, double rel_tol = 1e-8) {
  double total = 0.0;
  for (int mode = 1; mode <= 3; ++mode)
    total += w[mode] * static_cast<double>(numerical_rank(singular_values(unfold_matrix(t, mode)), rel_tol));
  return total;
}

struct Lemma1Check {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  bool holds = false;
  std::size_t max_rank = 0;         // r over the three gradient unfoldings
  double eta = 0.0;                 // +inf when some mode has numerical rank 1
  double tv = 0.0;
  bool rank_tolerance_note = false; // trailing singular values were dropped
};

// Evaluates the sandwich
//   (sqrt(1 + 1/eta) - 1) * TV  <=  GTNLN  <=  (sqrt(r) - 1) * TV
// on the temporal gradient of t. Singular values below rel_tol * sigma_1 are
// treated as zero for r and eta; their mass is carried as slack so the check
// is exact with respect to the full spectrum.
inline Lemma1Check check_lemma1(const Tensor3& t, const GradientOperator& op, const ModeWeights& w = {},
                                double rel_tol = 1e-8) {
  const Tensor3 g = op.gradient(t);
  const double fro = frobenius(g);
  if (fro == 0.0) throw DegenerateGradientError("sandwich check: gradient tensor is identically zero");

  Lemma1Check out;
  out.tv = fro;
  out.eta = 1.0;
  double upper_slack = 0.0;
  double retained_fro_min = fro;
  for (int mode = 1; mode <= 3; ++mode) {
    const Eigen::VectorXd sigma = singular_values(unfold_matrix(g, mode));
    out.value += w[mode] * nuclear_minus_frobenius(sigma);
    const std::size_t r = numerical_rank(sigma, rel_tol);
    out.max_rank = std::max(out.max_rank, r);
    const auto ri = static_cast<Eigen::Index>(r);
    const double dropped = sigma.tail(sigma.size() - ri).sum();
    if (dropped > 0.0) out.rank_tolerance_note = true;
    upper_slack += w[mode] * dropped;
    retained_fro_min = std::min(retained_fro_min, sigma.head(ri).norm());
    if (r < 2) {
      out.eta = std::numeric_limits<double>::infinity();
    } else {
      for (Eigen::Index j = 0; j + 1 < ri; ++j) out.eta = std::max(out.eta, sigma(j) / sigma(j + 1));
    }
  }
  const double lower_coef = std::isinf(out.eta) ? 0.0 : std::sqrt(1.0 + 1.0 / out.eta) - 1.0;
  out.lower = lower_coef * fro;
  out.upper = (std::sqrt(static_cast<double>(out.max_rank)) - 1.0) * fro;
  const double eps = 1e-12 * fro;
  const double lower_slack = lower_coef * (fro - retained_fro_min);
  out.holds = out.lower <= out.value + lower_slack + eps && out.value <= out.upper + upper_slack + eps;
  return out;
}

}  // namespace rtc
