#pragma once

#include <cmath>
#include <string>

#include <Eigen/QR>

#include "safex/distributions.hpp"
#include "safex/model.hpp"
#include "safex/simulator.hpp"

namespace safex {

/// Fitted parameters plus the data summaries the confidence radius needs.
struct ModelEstimate {
  Theta theta_hat;
  double sigma_hat = 0.0;
  Matrix Q_hat;  ///< X'X / n over regressors [x' u']
  Index n = 0;
  double lambda_min = 0.0;

  Index state_dim() const { return theta_hat.state_dim(); }
  Index action_dim() const { return theta_hat.action_dim(); }
};

struct ErrorBound {
  double epsilon = 0.0;
  double alpha = 0.0;
  Index n = 0;
};

namespace detail {

inline void check_training_data(const TrainingData& data) {
  require(data.X.rows() == data.Y.rows(), "X and Y must have the same number of rows");
  require(data.X.cols() > data.Y.cols(), "regressors must contain state and action columns");
  require(data.X.allFinite() && data.Y.allFinite(), "training data must be finite");
}

}  // namespace detail

/// Least squares for [A B] via column-pivoted Householder QR on X theta' = Y.
inline Theta fit_least_squares(const TrainingData& data) {
  detail::check_training_data(data);
  const Index n = data.size();
  const Index p = data.X.cols();
  if (n < p)
    throw EstimationError("least squares needs at least " + std::to_string(p) + " samples, got " +
                          std::to_string(n));
  Eigen::ColPivHouseholderQR<Matrix> qr(data.X);
  if (qr.rank() < p)
    throw EstimationError("regressor matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                          " of " + std::to_string(p) + "); inputs are not persistently exciting");
  const Matrix theta_t = qr.solve(data.Y);
  return Theta::from_matrix(theta_t.transpose(), data.state_dim());
}

/// sqrt( sum ||x_{i+1} - (A x_i + B u_i)||^2 / (d (n - d - d')) ).
inline double estimate_sigma(const TrainingData& data, const Theta& theta_hat) {
  detail::check_training_data(data);
  const Index n = data.size();
  const Index d = data.state_dim();
  const Index p = data.X.cols();
  detail::require(theta_hat.matrix().rows() == d && theta_hat.matrix().cols() == p,
                  "theta shape does not match the data");
  detail::require(n > p, "estimate_sigma needs n > d + d'");
  const double sse = (data.Y - data.X * theta_hat.matrix().transpose()).squaredNorm();
  return std::sqrt(sse / (static_cast<double>(d) * static_cast<double>(n - p)));
}

inline Matrix second_moment(const Matrix& X) {
  Matrix Q = (X.transpose() * X) / static_cast<double>(X.rows());
  return 0.5 * (Q + Q.transpose());
}

inline double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Full fit: theta_hat, sigma_hat, Q_hat and its smallest eigenvalue.
inline ModelEstimate estimate_model(const TrainingData& data) {
  ModelEstimate est;
  est.theta_hat = fit_least_squares(data);
  est.n = data.size();
  est.sigma_hat = est.n > data.X.cols() ? estimate_sigma(data, est.theta_hat) : 0.0;
  est.Q_hat = second_moment(data.X);
  est.lambda_min = min_eigenvalue(est.Q_hat);
  return est;
}

/// Radius of the Frobenius ball around theta_hat holding theta* with
/// probability 1 - alpha (union bound over the d rows):
///   sigma * sqrt( d * F^{-1}(1 - alpha/d) / (n * lambda_min) ),
/// F the chi-squared CDF with d + d' degrees of freedom.
inline ErrorBound epsilon_bound(const ModelEstimate& est, double alpha, double sigma) {
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  detail::require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
  detail::require(est.n > 0, "estimate has no samples");
  if (!(est.lambda_min > 0.0))
    throw EstimationError("second-moment matrix is not positive definite (lambda_min = " +
                          std::to_string(est.lambda_min) + ")");
  const double d = static_cast<double>(est.state_dim());
  const int dof = static_cast<int>(est.state_dim() + est.action_dim());
  const double quantile = chi_squared_inv_cdf(1.0 - alpha / d, dof);
  const double eps = sigma * std::sqrt(d * quantile / (static_cast<double>(est.n) * est.lambda_min));
  return ErrorBound{eps, alpha, est.n};
}

/// Same radius using the estimated noise scale.
inline ErrorBound epsilon_bound(const ModelEstimate& est, double alpha) {
  return epsilon_bound(est, alpha, est.sigma_hat);
}

/// Delta' (n Q / sigma^2) Delta for Delta = theta_hat[ell,:] - theta_star_row.
inline double row_ellipsoid_statistic(const ModelEstimate& est, const RowVector& theta_star_row,
                                      Index ell, double sigma) {
  detail::require(ell >= 0 && ell < est.state_dim(), "row index out of range");
  detail::require(theta_star_row.size() == est.Q_hat.rows(), "row length does not match Q_hat");
  detail::require(sigma > 0.0, "sigma must be positive for the ellipsoid test");
  if (!(est.lambda_min > 0.0)) throw EstimationError("Q_hat is singular");
  const Vector delta = (est.theta_hat.row(ell) - theta_star_row).transpose();
  return static_cast<double>(est.n) * delta.dot(est.Q_hat * delta) / (sigma * sigma);
}

/// True when theta_star_row lies inside the 1 - alpha confidence ellipsoid of row ell.
inline bool row_ellipsoid_check(const ModelEstimate& est, const RowVector& theta_star_row, Index ell,
                                double alpha, double sigma) {
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  const double stat = row_ellipsoid_statistic(est, theta_star_row, ell, sigma);
  const int dof = static_cast<int>(est.Q_hat.rows());
  return stat < chi_squared_inv_cdf(1.0 - alpha, dof);
}

}  // namespace safex
