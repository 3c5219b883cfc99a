#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "safex/model.hpp"
#include "safex/simulator.hpp"

namespace safex {

struct SafetyVerdict {
  bool safe = true;
  std::vector<Index> constrained;   ///< indices checked, in order
  std::vector<double> worst_values; ///< worst-case value for each entry of `constrained`
  std::optional<Index> binding_index;  ///< index with the largest violation, if unsafe
};

struct OneStepWorstCase {
  double value = 0.0;
  RowVector perturbation;  ///< optimal change of theta[ell,:], norm epsilon
};

namespace detail {

inline RowVector stacked_regressor(const Vector& x0, const Vector& u) {
  RowVector w(x0.size() + u.size());
  w << x0.transpose(), u.transpose();
  return w;
}

inline void check_theta_inputs(const Theta& theta, const Vector& x0, const Vector& u, Index ell) {
  require(x0.size() == theta.state_dim(), "x0 dimension does not match theta");
  require(u.size() == theta.action_dim(), "u dimension does not match theta");
  require(ell >= 0 && ell < theta.state_dim(), "ell out of range");
}

inline void require_stable(const Matrix& A, const char* who) {
  const double rho = spectral_radius(A);
  if (!(rho < 1.0))
    throw StabilityError(std::string(who) + " needs rho(A) < 1, got " + std::to_string(rho));
}

}  // namespace detail

/// max over ||theta - theta_hat||_F <= eps of A[ell,:] x0 + B[ell,:] u.
///
/// Only row ell matters, and a linear functional over a ball is maximised
/// along its gradient: value = eps * ||[x0' u']|| + theta_hat[ell,:] [x0; u].
inline OneStepWorstCase one_step_worst_case(const Theta& theta_hat, double epsilon, const Vector& x0,
                                            const Vector& u, Index ell) {
  detail::check_theta_inputs(theta_hat, x0, u, ell);
  detail::require(epsilon >= 0.0, "epsilon must be >= 0");
  const RowVector w = detail::stacked_regressor(x0, u);
  const double norm = w.norm();
  OneStepWorstCase out;
  out.value = epsilon * norm + theta_hat.row(ell).dot(w);
  out.perturbation = norm > 0.0 ? RowVector(epsilon * w / norm) : RowVector::Zero(w.size());
  return out;
}

inline SafetyVerdict one_step_safe(const Theta& theta_hat, double epsilon, const Vector& x0,
                                   const Vector& u, const SafetySpec& spec) {
  spec.check_dim(theta_hat.state_dim());
  SafetyVerdict verdict;
  double worst_margin = 0.0;
  for (Index ell : spec.constrained) {
    const double v = one_step_worst_case(theta_hat, epsilon, x0, u, ell).value;
    verdict.constrained.push_back(ell);
    verdict.worst_values.push_back(v);
    const double margin = v - spec.s[ell];
    if (margin > 0.0 && margin > worst_margin) {
      worst_margin = margin;
      verdict.safe = false;
      verdict.binding_index = ell;
    }
  }
  return verdict;
}

/// (I - A)^{-1} B u via an LU solve.
inline Vector steady_state_expectation(const Matrix& A, const Matrix& B, const Vector& u) {
  detail::require(A.rows() == A.cols() && B.rows() == A.rows(), "inconsistent A/B shapes");
  detail::require(u.size() == B.cols(), "u dimension does not match B");
  detail::require_stable(A, "steady_state_expectation");
  const Matrix M = Matrix::Identity(A.rows(), A.cols()) - A;
  return M.partialPivLu().solve(B * u);
}

inline Vector steady_state_expectation(const LinearGaussianModel& model, const Vector& u) {
  return steady_state_expectation(model.A, model.B, u);
}

/// Upper bound on max_{theta in eps-ball, rho(A)<1} [(I - A)^{-1} B u]_ell.
///
/// With M = I - A_hat and A = A_hat - E, ||E||_F <= eps, a Neumann series gives
///   ||(M + E)^{-1} - M^{-1}||_F <= ||M^{-1}||^2 eps / (1 - eps ||M^{-1}||),
/// valid when eps ||M^{-1}||_F < 1. The bound is then
///   eps ||M^{-1}|| ( ||M^{-1}|| / (1 - eps ||M^{-1}||) (||B_hat|| + eps) + 1 ) ||u||
///   + [M^{-1} B_hat u]_ell.
/// All norms Frobenius.
inline double fixed_action_upper_bound(const Theta& theta_hat, double epsilon, const Vector& u, Index ell) {
  detail::require(epsilon >= 0.0, "epsilon must be >= 0");
  detail::require(u.size() == theta_hat.action_dim(), "u dimension does not match theta");
  detail::require(ell >= 0 && ell < theta_hat.state_dim(), "ell out of range");
  const Matrix A_hat = theta_hat.A();
  const Matrix B_hat = theta_hat.B();
  detail::require_stable(A_hat, "fixed_action_upper_bound");
  const Index d = A_hat.rows();
  const Matrix M_inv = (Matrix::Identity(d, d) - A_hat).inverse();
  const double m_inv = M_inv.norm();
  const double q = epsilon * m_inv;
  if (!(q < 1.0))
    throw BoundInapplicableError("fixed_action_upper_bound needs eps * ||(I - A_hat)^{-1}||_F < 1, got " +
                                 std::to_string(q));
  const double nominal = (M_inv * (B_hat * u))[ell];
  const double radius = epsilon * m_inv * (m_inv / (1.0 - q) * (B_hat.norm() + epsilon) + 1.0);
  return radius * u.norm() + nominal;
}

/// Bound on ||A^{t-1} - A_hat^{t-1}||_F over ||A - A_hat||_F <= eps:
/// (||A_hat|| + eps)^{t-1} - ||A_hat||^{t-1}.
inline double matrix_power_perturbation_bound(const Matrix& A_hat, double epsilon, int t) {
  detail::require(t >= 1, "t must be >= 1");
  detail::require(epsilon >= 0.0, "epsilon must be >= 0");
  const double a = A_hat.norm();
  return std::pow(a + epsilon, t - 1) - std::pow(a, t - 1);
}

/// Closed-form upper bound on max E[x_{tau,ell}] over the eps-ball of models and
/// any z_0..z_{tau-1} in B_delta(u), expectation mode.
///
/// Each term of A^tau x0 + sum_k A^k B z_{tau-1-k} is split into its nominal
/// value under theta_hat at z = u, the exact worst case of the z - u part
/// under theta_hat, and a perturbation term
///   ( P_k (||B_hat|| + eps) + eps ||A_hat^k|| ) (||u|| + delta),
/// P_k the matrix-power perturbation bound. Conservative by construction.
inline double trajectory_ball_loose_bound(const Theta& theta_hat, double epsilon, double delta,
                                          const Vector& u, const Vector& x0, Index ell, int tau) {
  detail::check_theta_inputs(theta_hat, x0, u, ell);
  detail::require(epsilon >= 0.0 && delta >= 0.0, "epsilon and delta must be >= 0");
  detail::require(tau >= 1, "tau must be >= 1");
  const Matrix A_hat = theta_hat.A();
  const Matrix B_hat = theta_hat.B();
  detail::require_stable(A_hat, "trajectory_ball_loose_bound");
  const double b_norm = B_hat.norm();
  const double z_norm = u.norm() + delta;
  const Index d = A_hat.rows();

  Matrix power = Matrix::Identity(d, d);  // A_hat^k
  double total = 0.0;
  for (int k = 0; k < tau; ++k) {
    const RowVector row = power.row(ell) * B_hat;
    const double perturb = matrix_power_perturbation_bound(A_hat, epsilon, k + 1);
    total += row.dot(u) + delta * row.norm() + (perturb * (b_norm + epsilon) + epsilon * power.norm()) * z_norm;
    power = power * A_hat;
  }
  total += power.row(ell).dot(x0) + matrix_power_perturbation_bound(A_hat, epsilon, tau + 1) * x0.norm();
  return total;
}

}  // namespace safex
