/*
 * solver.hpp
 *
 * ADMM for robust tensor completion with the gradient tensor nuclear l1-l2
 * norm, plus the ablation variants sharing the same skeleton.
 *
 * GTNLN splitting (one iteration, all multiplier steps use the pre-growth mu):
 *   X <- (I + D^T D)^{-1} [grad^T(G - M/mu) + P(Y) - K - E + N/mu]
 *   G <- (sum_i fold_i(Z_i + Q_i/mu) + grad X + M/mu) / 4
 *   K <- P(Y) - X - E + N/mu, then zeroed on the sampling set
 *   Z_i <- prox_{alpha_i/mu, nuclear l1-l2}(G_i - Q_i/mu)
 *   E <- S_{lambda/mu}(P(Y) - X - K + N/mu)
 *   M += mu (grad X - G);  N += mu (P(Y) - X - E - K);  Q_i += mu (Z_i - G_i)
 *   mu <- min(growth * mu, cap)
 *
 * Variants TNLN_ON_X / CONVEX_TNN / TNLN_PLUS_TV split Z_i = X_i instead;
 * the X-update then solves (4 I + (2 theta / mu) D^T D) X = sum_i fold_i(Z_i + Q_i/mu)
 * + P(Y) - K - E + N/mu, and the G / M blocks are absent.
 */
#pragma once

#include "rtc/regularizers.hpp"
#include "rtc/tensor.hpp"
#include "rtc/transforms.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtc {

enum class Variant { Gtnln, TnlnOnX, ConvexTnn, TnlnPlusTv };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Gtnln: return "gtnln";
    case Variant::TnlnOnX: return "tnln";
    case Variant::ConvexTnn: return "convex";
    case Variant::TnlnPlusTv: return "tnln-tv";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "gtnln") return Variant::Gtnln;
  if (s == "tnln") return Variant::TnlnOnX;
  if (s == "convex") return Variant::ConvexTnn;
  if (s == "tnln-tv") return Variant::TnlnPlusTv;
  throw std::invalid_argument("unknown variant '" + s + "' (expected gtnln|tnln|convex|tnln-tv)");
}

class DivergedError : public std::runtime_error {
 public:
  DivergedError(int iteration, const std::string& what)
      : std::runtime_error("solver diverged at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// lambda = 1 / sqrt(max(n1, n2) * n3)
inline double auto_lambda(const Dims& d) {
  check_dims(d);
  return 1.0 / std::sqrt(static_cast<double>(std::max(d.n1, d.n2) * d.n3));
}

struct SolverConfig {
  ModeWeights weights;
  std::optional<double> lambda;  // nullopt: auto_lambda(dims)
  double mu0 = 1e-6;
  double mu_growth = 1.1;
  double mu_cap = 1e10;
  int max_iters = 300;
  double rel_tol = 1e-5;
  double feas_tol = 1e-4;  // relative primal residual required alongside rel_tol
  Variant variant = Variant::Gtnln;
  std::optional<double> theta;  // TNLN_PLUS_TV only
  bool parallel_modes = false;  // run the three per-mode proxes as async tasks

  void validate() const {
    if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(mu0 > 0.0)) throw std::invalid_argument("mu0 must be > 0");
    if (!(mu_growth > 1.0)) throw std::invalid_argument("mu_growth must be > 1");
    if (!(mu_cap > 0.0)) throw std::invalid_argument("mu_cap must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    if (!(feas_tol > 0.0)) throw std::invalid_argument("feas_tol must be > 0");
    if (variant == Variant::TnlnPlusTv && !theta)
      throw std::invalid_argument("variant tnln-tv requires theta");
    if (variant != Variant::TnlnPlusTv && theta)
      throw std::invalid_argument("theta is only meaningful for variant tnln-tv");
    if (theta && !(*theta >= 0.0)) throw std::invalid_argument("theta must be >= 0");
  }

  double resolved_lambda(const Dims& d) const { return lambda ? *lambda : auto_lambda(d); }
};

using ModeMatrices = std::array<Eigen::MatrixXd, 3>;

struct AdmmState {
  Tensor3 x, g, k, e;  // g is unused by the X-split variants
  ModeMatrices z, q;
  Tensor3 m, n;
  double mu = 0.0;
  int iter = 0;

  explicit AdmmState(const Dims& d) : x(d), g(d), k(d), e(d), m(d), n(d) {
    for (int mode = 1; mode <= 3; ++mode) {
      const auto rows = static_cast<Eigen::Index>(d[mode]);
      const auto cols = static_cast<Eigen::Index>(d.size() / d[mode]);
      z[static_cast<std::size_t>(mode - 1)] = Eigen::MatrixXd::Zero(rows, cols);
      q[static_cast<std::size_t>(mode - 1)] = Eigen::MatrixXd::Zero(rows, cols);
    }
  }
};

struct TraceEntry {
  int iter = 0;
  double relative_change = 0.0;  // |X_{t+1} - X_t|_F / |X_t|_F
  double gradient_residual = 0.0;  // |grad X - G|_F (0 for X-split variants)
  double observation_residual = 0.0;  // |P(Y) - X - E - K|_F
  double consensus_residual = 0.0;  // sqrt(sum_i |Z_i - G_i|_F^2)
  double dual_residual = 0.0;  // mu_t |X_{t+1} - X_t|_F
  double primal_residual = 0.0;  // sqrt(grad^2 + obs^2 + consensus^2) / max(1, |P(Y)|_F)
  double mu = 0.0;  // value used in this iteration
  double e_zero_fraction = 0.0;  // share of observed entries with E exactly 0
};

struct RecoveryReport {
  Tensor3 x_hat;
  Tensor3 e_hat;  // masked to the sampling set
  std::vector<TraceEntry> trace;
  int iterations_run = 0;
  bool converged = false;
  std::int64_t wall_ms = 0;
  double lambda = 0.0;
};

inline double relative_change(const Tensor3& next, const Tensor3& prev) {
  const double diff = (next.vec() - prev.vec()).norm();
  if (diff == 0.0) return 0.0;
  const double base = frobenius(prev);
  return base > 0.0 ? diff / base : std::numeric_limits<double>::infinity();
}

// ---- GTNLN closed-form updates -------------------------------------------

// Solves X + grad^T grad X = W with
// W = grad^T(G - M/mu) + P(Y) - K - E + N/mu.
inline Tensor3 update_x(const AdmmState& s, const Tensor3& observed, const GradientOperator& op) {
  const double inv_mu = 1.0 / s.mu;
  Tensor3 w = op.gradient_adjoint(s.g - s.m * inv_mu);
  w.vec() += observed.vec() - s.k.vec() - s.e.vec() + s.n.vec() * inv_mu;
  return op.solve_identity_plus_laplacian(w);
}

inline Tensor3 update_g(const AdmmState& s, const GradientOperator& op) {
  const double inv_mu = 1.0 / s.mu;
  const Dims& d = s.x.dims();
  Tensor3 acc = op.gradient(s.x);
  acc.vec() += s.m.vec() * inv_mu;
  for (int mode = 1; mode <= 3; ++mode) {
    const auto i = static_cast<std::size_t>(mode - 1);
    acc += fold(Eigen::MatrixXd(s.z[i] + s.q[i] * inv_mu), mode, d);
  }
  acc *= 0.25;
  return acc;
}

// K = P(Y) - X - E + N/mu with the sampling set zeroed.
inline Tensor3 update_k(const AdmmState& s, const Tensor3& observed, const ObservationMask& mask) {
  Tensor3 k(s.x.dims());
  k.vec() = observed.vec() - s.x.vec() - s.e.vec() + s.n.vec() * (1.0 / s.mu);
  zero_observed(k, mask);
  return k;
}

namespace detail {
template <typename PerMode>
ModeMatrices for_each_mode(bool parallel, PerMode&& f) {
  ModeMatrices out;
  if (!parallel) {
    for (int mode = 1; mode <= 3; ++mode) out[static_cast<std::size_t>(mode - 1)] = f(mode);
    return out;
  }
  std::array<std::future<Eigen::MatrixXd>, 3> tasks;
  for (int mode = 1; mode <= 3; ++mode)
    tasks[static_cast<std::size_t>(mode - 1)] = std::async(std::launch::async, f, mode);
  for (std::size_t i = 0; i < 3; ++i) out[i] = tasks[i].get();
  return out;
}
}  // namespace detail

// Z_i = prox_{alpha_i/mu}(unfold_i(G) - Q_i/mu)
inline ModeMatrices update_z(const AdmmState& s, const ModeWeights& w, bool parallel = false) {
  const double inv_mu = 1.0 / s.mu;
  return detail::for_each_mode(parallel, [&](int mode) {
    const auto i = static_cast<std::size_t>(mode - 1);
    return prox_nuclear_l1l2(unfold_matrix(s.g, mode) - s.q[i] * inv_mu, w[mode] * inv_mu);
  });
}

// E = S_{lambda/mu}(P(Y) - X - K + N/mu)
inline Tensor3 update_e(const AdmmState& s, const Tensor3& observed, double lambda) {
  Tensor3 r(s.x.dims());
  r.vec() = observed.vec() - s.x.vec() - s.k.vec() + s.n.vec() * (1.0 / s.mu);
  return soft_threshold(r, lambda / s.mu);
}

// Dual ascent on M, N, Q with the current mu.
inline void update_multipliers(AdmmState& s, const Tensor3& observed, const GradientOperator& op) {
  const Tensor3 gx = op.gradient(s.x);
  s.m.vec() += s.mu * (gx.vec() - s.g.vec());
  s.n.vec() += s.mu * (observed.vec() - s.x.vec() - s.e.vec() - s.k.vec());
  for (int mode = 1; mode <= 3; ++mode) {
    const auto i = static_cast<std::size_t>(mode - 1);
    s.q[i] += s.mu * (s.z[i] - unfold_matrix(s.g, mode));
  }
}

// ---- X-split variants -----------------------------------------------------

// Solves (4 I + (2 theta / mu) D^T D) X = sum_i fold_i(Z_i + Q_i/mu) + P(Y) - K - E + N/mu.
inline Tensor3 update_x_split(const AdmmState& s, const Tensor3& observed, const GradientOperator& op,
                              double theta) {
  const double inv_mu = 1.0 / s.mu;
  const Dims& d = s.x.dims();
  Tensor3 rhs(d);
  rhs.vec() = observed.vec() - s.k.vec() - s.e.vec() + s.n.vec() * inv_mu;
  for (int mode = 1; mode <= 3; ++mode) {
    const auto i = static_cast<std::size_t>(mode - 1);
    rhs += fold(Eigen::MatrixXd(s.z[i] + s.q[i] * inv_mu), mode, d);
  }
  if (theta == 0.0) return rhs * 0.25;
  return op.solve_shifted(rhs, 4.0, 2.0 * theta * inv_mu);
}

inline ModeMatrices update_z_split(const AdmmState& s, const ModeWeights& w, bool convex,
                                   bool parallel = false) {
  const double inv_mu = 1.0 / s.mu;
  return detail::for_each_mode(parallel, [&](int mode) {
    const auto i = static_cast<std::size_t>(mode - 1);
    const Eigen::MatrixXd arg = unfold_matrix(s.x, mode) - s.q[i] * inv_mu;
    const double rho = w[mode] * inv_mu;
    return convex ? prox_nuclear(arg, rho) : prox_nuclear_l1l2(arg, rho);
  });
}

inline void update_multipliers_split(AdmmState& s, const Tensor3& observed) {
  s.n.vec() += s.mu * (observed.vec() - s.x.vec() - s.e.vec() - s.k.vec());
  for (int mode = 1; mode <= 3; ++mode) {
    const auto i = static_cast<std::size_t>(mode - 1);
    s.q[i] += s.mu * (s.z[i] - unfold_matrix(s.x, mode));
  }
}

// ---- driver ---------------------------------------------------------------

class AdmmSolver {
 public:
  AdmmSolver(const Tensor3& y, const ObservationMask& mask, SolverConfig cfg, const GradientOperator& op)
      : mask_(mask), cfg_(std::move(cfg)), op_(op), observed_(project(y, mask)), state_(y.dims()) {
    require_same_dims(y.dims(), mask.dims(), "solve");
    if (y.dims().n2 != op.n2())
      throw ShapeError("solve: operator built for n2=" + std::to_string(op.n2()) + ", tensor has " +
                       y.dims().str());
    cfg_.validate();
    validate_finite(observed_, "solve input");
    lambda_ = cfg_.resolved_lambda(y.dims());
    observed_norm_ = frobenius(observed_);
    state_.x = observed_;
    if (cfg_.variant == Variant::Gtnln) state_.g = op_.gradient(state_.x);
    state_.mu = cfg_.mu0;
  }

  const AdmmState& state() const { return state_; }
  const SolverConfig& config() const { return cfg_; }
  const Tensor3& observed() const { return observed_; }
  double lambda() const { return lambda_; }

  // One full ADMM iteration followed by mu growth.
  TraceEntry step() {
    const Tensor3 x_prev = state_.x;
    TraceEntry entry;
    entry.mu = state_.mu;
    entry.iter = state_.iter + 1;

    try {
      advance(entry);
    } catch (const NumericalError& e) {
      throw DivergedError(entry.iter, e.what());
    }

    if (!state_.x.all_finite() || !state_.e.all_finite())
      throw DivergedError(entry.iter, "non-finite iterate");

    const double diff = (state_.x.vec() - x_prev.vec()).norm();
    entry.relative_change = relative_change(state_.x, x_prev);
    entry.dual_residual = state_.mu * diff;
    entry.observation_residual =
        (observed_.vec() - state_.x.vec() - state_.e.vec() - state_.k.vec()).norm();
    entry.e_zero_fraction = observed_zero_fraction(state_.e);
    entry.primal_residual = std::sqrt(entry.gradient_residual * entry.gradient_residual +
                                      entry.observation_residual * entry.observation_residual +
                                      entry.consensus_residual * entry.consensus_residual) /
                            std::max(1.0, observed_norm_);

    state_.mu = std::min(state_.mu * cfg_.mu_growth, cfg_.mu_cap);
    state_.iter = entry.iter;
    return entry;
  }

  RecoveryReport run() {
    const auto start = std::chrono::steady_clock::now();
    RecoveryReport report;
    report.lambda = lambda_;
    while (state_.iter < cfg_.max_iters) {
      report.trace.push_back(step());
      const TraceEntry& last = report.trace.back();
      if (last.relative_change < cfg_.rel_tol && last.primal_residual < cfg_.feas_tol) {
        report.converged = true;
        break;
      }
    }
    report.iterations_run = state_.iter;
    report.x_hat = state_.x;
    report.e_hat = project(state_.e, mask_);
    report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return report;
  }

 private:
  // The variable and multiplier updates of one iteration.
  void advance(TraceEntry& entry) {
    if (cfg_.variant == Variant::Gtnln) {
      state_.x = update_x(state_, observed_, op_);
      state_.g = update_g(state_, op_);
      state_.k = update_k(state_, observed_, mask_);
      state_.z = update_z(state_, cfg_.weights, cfg_.parallel_modes);
      state_.e = update_e(state_, observed_, lambda_);
      update_multipliers(state_, observed_, op_);
      entry.gradient_residual = (op_.gradient(state_.x).vec() - state_.g.vec()).norm();
      entry.consensus_residual = consensus_residual(state_.g);
    } else {
      const double theta = cfg_.theta.value_or(0.0);
      state_.x = update_x_split(state_, observed_, op_, theta);
      state_.k = update_k(state_, observed_, mask_);
      state_.z = update_z_split(state_, cfg_.weights, cfg_.variant == Variant::ConvexTnn,
                                cfg_.parallel_modes);
      state_.e = update_e(state_, observed_, lambda_);
      update_multipliers_split(state_, observed_);
      entry.consensus_residual = consensus_residual(state_.x);
    }
  }

  double consensus_residual(const Tensor3& target) const {
    double sq = 0.0;
    for (int mode = 1; mode <= 3; ++mode)
      sq += (state_.z[static_cast<std::size_t>(mode - 1)] - unfold_matrix(target, mode)).squaredNorm();
    return std::sqrt(sq);
  }

  double observed_zero_fraction(const Tensor3& e) const {
    std::size_t zeros = 0, total = 0;
    for (std::size_t k = 0; k < e.size(); ++k)
      if (mask_[k]) {
        ++total;
        if (e[k] == 0.0) ++zeros;
      }
    return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0;
  }

  ObservationMask mask_;
  SolverConfig cfg_;
  const GradientOperator& op_;
  Tensor3 observed_;
  AdmmState state_;
  double lambda_ = 0.0;
  double observed_norm_ = 0.0;
};

// Runs the configured model (GTNLN unless cfg.variant says otherwise).
inline RecoveryReport solve(const Tensor3& y, const ObservationMask& mask, const SolverConfig& cfg,
                            const GradientOperator& op) {
  return AdmmSolver(y, mask, cfg, op).run();
}

inline RecoveryReport solve(const Tensor3& y, const ObservationMask& mask, const SolverConfig& cfg = {}) {
  const GradientOperator op(y.dims().n2);
  return solve(y, mask, cfg, op);
}

// Ablation models; cfg.variant must not be GTNLN.
inline RecoveryReport solve_variant(const Tensor3& y, const ObservationMask& mask, const SolverConfig& cfg,
                                    const GradientOperator& op) {
  if (cfg.variant == Variant::Gtnln)
    throw std::invalid_argument("solve_variant expects an ablation variant, got gtnln");
  return solve(y, mask, cfg, op);
}

}  // namespace rtc
