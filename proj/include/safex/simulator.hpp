#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "safex/distributions.hpp"
#include "safex/model.hpp"
#include "safex/random.hpp"

namespace safex {

/// x_0..x_T with u_0..u_{T-1}.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Vector> actions;

  std::size_t horizon() const { return actions.size(); }
  bool consistent() const { return states.size() == actions.size() + 1; }
};

/// Regressors [x_i' u_i'] stacked as rows of X, targets x_{i+1}' as rows of Y.
struct TrainingData {
  Matrix X;
  Matrix Y;

  Index size() const { return X.rows(); }
  Index state_dim() const { return Y.cols(); }
  Index action_dim() const { return X.cols() - Y.cols(); }
};

class EpisodeLog {
 public:
  EpisodeLog() = default;
  EpisodeLog(std::uint64_t seed, std::string model_id) : seed_(seed), model_id_(std::move(model_id)) {}

  void append(Trajectory traj) {
    detail::require(traj.consistent(), "trajectory must have one more state than actions");
    triples_ += traj.actions.size();
    trajectories_.push_back(std::move(traj));
  }

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  std::size_t triple_count() const { return triples_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& model_id() const { return model_id_; }

  /// Flattened (x_i, u_i) -> x_{i+1} triples, in episode order.
  TrainingData training_data() const {
    TrainingData data;
    if (trajectories_.empty()) return data;
    const auto& first = trajectories_.front();
    const Index d = first.states.front().size();
    const Index dp = first.actions.empty() ? 0 : first.actions.front().size();
    data.X.resize(static_cast<Index>(triples_), d + dp);
    data.Y.resize(static_cast<Index>(triples_), d);
    Index row = 0;
    for (const auto& traj : trajectories_) {
      for (std::size_t t = 0; t < traj.actions.size(); ++t, ++row) {
        data.X.row(row).head(d) = traj.states[t].transpose();
        data.X.row(row).tail(dp) = traj.actions[t].transpose();
        data.Y.row(row) = traj.states[t + 1].transpose();
      }
    }
    return data;
  }

 private:
  std::uint64_t seed_ = 0;
  std::string model_id_;
  std::vector<Trajectory> trajectories_;
  std::size_t triples_ = 0;
};

namespace detail {

inline void check_step_shapes(const LinearGaussianModel& model, const Vector& x, const Vector& u) {
  require(x.size() == model.state_dim(), "state has dimension " + std::to_string(x.size()) +
                                             ", model expects " + std::to_string(model.state_dim()));
  require(u.size() == model.action_dim(), "action has dimension " + std::to_string(u.size()) +
                                              ", model expects " + std::to_string(model.action_dim()));
}

}  // namespace detail

/// One stochastic transition A x + B u + xi.
inline Vector step(const LinearGaussianModel& model, const Vector& x, const Vector& u, Rng& rng) {
  detail::check_step_shapes(model, x, u);
  Vector next = model.A * x + model.B * u;
  if (model.sigma > 0.0) next += model.sigma * rng.normal_vector(next.size());
  return next;
}

/// E[x_1..x_tau] for actions u_0..u_{tau-1} applied in order. No stability needed.
inline std::vector<Vector> expected_rollout(const Matrix& A, const Matrix& B, const Vector& x0,
                                            const std::vector<Vector>& actions) {
  detail::require(A.rows() == A.cols() && B.rows() == A.rows(), "inconsistent A/B shapes");
  detail::require(x0.size() == A.rows(), "x0 dimension does not match A");
  std::vector<Vector> out;
  out.reserve(actions.size());
  Vector x = x0;
  for (const auto& u : actions) {
    detail::require(u.size() == B.cols(), "action dimension does not match B");
    x = A * x + B * u;
    out.push_back(x);
  }
  return out;
}

inline std::vector<Vector> expected_rollout(const LinearGaussianModel& model, const Vector& x0,
                                            const std::vector<Vector>& actions) {
  return expected_rollout(model.A, model.B, x0, actions);
}

/// Var[x_{tau,ell}] = sigma^2 sum_{t<tau} ||A^t[ell,:]||^2.
inline double state_variance(const Matrix& A, double sigma, int tau, Index ell) {
  detail::require(A.rows() == A.cols(), "A must be square");
  detail::require(tau >= 1, "tau must be >= 1");
  detail::require(ell >= 0 && ell < A.rows(), "ell out of range");
  RowVector row = RowVector::Unit(A.cols(), ell);
  double sum = 0.0;
  for (int t = 0; t < tau; ++t) {
    sum += row.squaredNorm();
    row = row * A;
  }
  return sigma * sigma * sum;
}

/// Limit of state_variance as tau -> infinity (requires rho(A) < 1).
///
/// Stops once the whole-matrix increment ||A^t||_F^2 drops below tol times the
/// running sum; that term dominates the row increment, so the row partial
/// sums have settled too. Hard cap of 1e6 terms.
inline double steady_state_variance(const Matrix& A, double sigma, Index ell, double tol = 1e-10) {
  detail::require(A.rows() == A.cols(), "A must be square");
  detail::require(ell >= 0 && ell < A.rows(), "ell out of range");
  detail::require(tol > 0.0, "tol must be positive");
  const double rho = spectral_radius(A);
  if (!(rho < 1.0))
    throw StabilityError("steady_state_variance needs rho(A) < 1, got " + std::to_string(rho));
  RowVector row = RowVector::Unit(A.cols(), ell);
  Matrix power = Matrix::Identity(A.rows(), A.cols());
  double sum = 0.0;
  constexpr long kMaxTerms = 1000000;
  for (long t = 0; t < kMaxTerms; ++t) {
    sum += row.squaredNorm();
    row = row * A;
    power = power * A;
    if (power.squaredNorm() < tol * sum) break;
  }
  return sigma * sigma * sum;
}

/// c = Phi^{-1}(1 - gamma / T): per-step multiplier so that a union bound over
/// T steps gives overall confidence 1 - gamma.
inline double confidence_multiplier(double gamma, int T) {
  detail::require(T >= 1, "T must be >= 1");
  detail::require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  return normal_quantile(1.0 - gamma / static_cast<double>(T));
}

/// Action source: (state, step index, rng) -> action.
using Policy = std::function<Vector(const Vector&, int, Rng&)>;

inline Policy constant_policy(Vector u) {
  return [u = std::move(u)](const Vector&, int, Rng&) { return u; };
}

inline Trajectory run_episode(const LinearGaussianModel& model, const Vector& x0, const Policy& policy,
                              int T, Rng& rng) {
  detail::require(T >= 1, "episode length must be >= 1");
  Trajectory traj;
  traj.states.reserve(T + 1);
  traj.actions.reserve(T);
  traj.states.push_back(x0);
  for (int t = 0; t < T; ++t) {
    Vector u = policy(traj.states.back(), t, rng);
    traj.states.push_back(step(model, traj.states.back(), u, rng));
    traj.actions.push_back(std::move(u));
  }
  return traj;
}

}  // namespace safex
