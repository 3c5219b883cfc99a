#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "safex/model.hpp"
#include "safex/random.hpp"
#include "safex/simulator.hpp"

namespace safex {

/// Knobs of the alternating adversary and the radius search.
struct SafeBallConfig {
  int restarts = 5;             ///< random initialisations per (ell, tau)
  int inner_iterations = 50;    ///< max alternating passes per restart
  int ascent_steps = 5;         ///< gradient steps per A-step
  double initial_step = 1.0;    ///< first trial step, as a fraction of epsilon
  int max_halvings = 30;        ///< backtracking budget per gradient step
  double rho_margin = 1e-3;     ///< accepted A satisfy rho(A) <= 1 - rho_margin
  double improvement_tol = 1e-8;
  int init_attempts = 1000;     ///< rejection sampling budget for a stable start
  double c = 0.0;               ///< std-dev multiplier; 0 = expectation mode
  double sigma = 0.0;           ///< noise scale used by the c * sqrt(Var) term
  double omega = 0.05;          ///< radius search tolerance
  double max_radius = 1e3;      ///< galloping stops here when nothing binds

  void validate() const {
    detail::require(restarts >= 1, "restarts must be >= 1");
    detail::require(inner_iterations >= 1, "inner_iterations must be >= 1");
    detail::require(ascent_steps >= 0, "ascent_steps must be >= 0");
    detail::require(initial_step > 0.0, "initial_step must be positive");
    detail::require(max_halvings >= 0, "max_halvings must be >= 0");
    detail::require(rho_margin > 0.0 && rho_margin < 1.0, "rho_margin must lie in (0, 1)");
    detail::require(c >= 0.0 && std::isfinite(c), "c must be finite and >= 0");
    detail::require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be finite and >= 0");
    detail::require(omega > 0.0, "omega must be positive");
    detail::require(max_radius > 0.0, "max_radius must be positive");
  }
};

/// A feasible (A, B, z) whose objective exceeds the bound on x_ell at time tau.
/// Carries the context (x0, ball, epsilon, c, sigma) needed to re-check it.
struct AdversarialWitness {
  Matrix A;
  Matrix B;
  std::vector<Vector> z;  ///< z_0..z_{tau-1}, in execution order
  Index ell = 0;
  int tau = 0;
  double value = 0.0;

  Vector x0;
  Vector center;
  double delta = 0.0;
  double epsilon = 0.0;
  double c = 0.0;
  double sigma = 0.0;
};

struct BallCheckResult {
  bool safe = true;
  std::optional<AdversarialWitness> witness;
  /// Largest objective minus bound seen over every (ell, tau) explored.
  double max_margin = -std::numeric_limits<double>::infinity();
};

/// Best point found by the adversary for a single (ell, tau).
struct AdversaryResult {
  Matrix A;
  Matrix B;
  std::vector<Vector> z;
  double value = -std::numeric_limits<double>::infinity();
};

/// [A^tau x0 + sum_t A^{tau-1-t} B z_t]_ell + c * sigma * sqrt(sum_{k<tau} ||A^k[ell,:]||^2).
inline double ball_objective(const Matrix& A, const Matrix& B, const std::vector<Vector>& z, const Vector& x0,
                             Index ell, double c, double sigma) {
  const int tau = static_cast<int>(z.size());
  detail::require(tau >= 1, "ball objective needs at least one action");
  RowVector r = RowVector::Unit(A.rows(), ell);
  double value = 0.0;
  double var_sum = 0.0;
  for (int k = 0; k < tau; ++k) {
    var_sum += r.squaredNorm();
    value += r.dot(B * z[tau - 1 - k]);
    r = r * A;
  }
  value += r.dot(x0);
  if (c > 0.0) value += c * sigma * std::sqrt(var_sum);
  return value;
}

/// Analytic gradient of ball_objective with respect to A (B and z fixed).
///
/// With r_k = e_ell' A^k and w_k the vector multiplied by A^k in the mean
/// (w_tau = x0, w_k = B z_{tau-1-k}), the mean term has gradient
/// sum_j r_j' y_j' where y_{tau-1} = w_tau and y_j = w_{j+1} + A y_{j+1}.
/// The variance sum V has gradient 2 sum_j r_j' q_j' with
/// q_{tau-2} = r_{tau-1}' and q_j = r_{j+1}' + A q_{j+1}.
inline Matrix ball_objective_gradient_A(const Matrix& A, const Matrix& B, const std::vector<Vector>& z,
                                        const Vector& x0, Index ell, double c, double sigma) {
  const int tau = static_cast<int>(z.size());
  detail::require(tau >= 1, "ball objective needs at least one action");
  const Index d = A.rows();
  std::vector<RowVector> r(tau + 1);
  r[0] = RowVector::Unit(d, ell);
  for (int k = 1; k <= tau; ++k) r[k] = r[k - 1] * A;

  Matrix grad = Matrix::Zero(d, d);
  Vector y = x0;  // y_{tau-1}
  for (int j = tau - 1; j >= 0; --j) {
    grad.noalias() += r[j].transpose() * y.transpose();
    if (j > 0) y = B * z[tau - 1 - j] + A * y;  // w_j = B z_{tau-1-j}
  }

  if (c > 0.0 && sigma > 0.0 && tau >= 2) {
    double var_sum = 0.0;
    for (int k = 0; k < tau; ++k) var_sum += r[k].squaredNorm();
    Matrix grad_var = Matrix::Zero(d, d);
    Vector q = r[tau - 1].transpose();  // q_{tau-2}
    for (int j = tau - 2; j >= 0; --j) {
      grad_var.noalias() += r[j].transpose() * q.transpose();
      if (j > 0) q = r[j].transpose() + A * q;
    }
    grad += (c * sigma / std::sqrt(var_sum)) * grad_var;
  }
  return grad;
}

/// Gradient with respect to B: sum_t (A^{tau-1-t}[ell,:])' z_t', the reshaped
/// tensor-product sum the B-step maximises over.
inline Matrix ball_objective_gradient_B(const Matrix& A, const std::vector<Vector>& z, Index ell) {
  const int tau = static_cast<int>(z.size());
  RowVector r = RowVector::Unit(A.rows(), ell);
  Matrix G = Matrix::Zero(A.rows(), z.front().size());
  for (int k = 0; k < tau; ++k) {
    G.noalias() += r.transpose() * z[tau - 1 - k].transpose();
    r = r * A;
  }
  return G;
}

namespace detail {

/// One (ell, tau) adversarial subproblem over the eps-ball of models and the
/// delta-ball of actions (or a pinned action sequence).
class BallAdversary {
 public:
  BallAdversary(const Theta& theta_hat, double epsilon, const Vector& x0, Index ell, int tau,
                const SafeBallConfig& config)
      : A_hat_(theta_hat.A()),
        B_hat_(theta_hat.B()),
        epsilon_(epsilon),
        x0_(x0),
        ell_(ell),
        tau_(tau),
        config_(config) {}

  void set_ball(const Vector& center, double delta) {
    center_ = center;
    delta_ = delta;
    pinned_.clear();
  }

  void pin_actions(std::vector<Vector> actions) { pinned_ = std::move(actions); }

  bool pinned() const { return !pinned_.empty(); }

  double value(const Matrix& A, const Matrix& B, const std::vector<Vector>& z) const {
    return ball_objective(A, B, z, x0_, ell_, config_.c, config_.sigma);
  }

  /// Random stable start in the joint eps-ball; z uniform in the delta-ball.
  AdversaryResult random_start(Rng& rng) const {
    AdversaryResult s;
    const Index d = A_hat_.rows();
    const Index dp = B_hat_.cols();
    const Index dim = d * (d + dp);
    bool found = false;
    for (int attempt = 0; attempt < config_.init_attempts && !found; ++attempt) {
      Vector dir = rng.unit_sphere(dim);
      const double radius = epsilon_ * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
      dir *= radius;
      Matrix D = Eigen::Map<const Matrix>(dir.data(), d, d + dp);
      Matrix A = A_hat_ + D.leftCols(d);
      if (spectral_radius(A) <= 1.0 - config_.rho_margin) {
        s.A = std::move(A);
        s.B = B_hat_ + D.rightCols(dp);
        found = true;
      }
    }
    if (!found) {
      if (spectral_radius(A_hat_) > 1.0 - config_.rho_margin)
        throw OptimizerError("could not find a stable model in the epsilon-ball (rho(A_hat) = " +
                             std::to_string(spectral_radius(A_hat_)) + ")");
      s.A = A_hat_;
      s.B = B_hat_;
    }
    s.z = initial_actions(rng);
    s.value = value(s.A, s.B, s.z);
    return s;
  }

  /// Alternating B-step / z-step / A-step ascent from `start`. Stops early once
  /// the value exceeds `stop_above`.
  AdversaryResult ascend(AdversaryResult cur, double stop_above) const {
    cur.value = value(cur.A, cur.B, cur.z);
    check_finite(cur.value);
    double step = config_.initial_step;
    for (int pass = 0; pass < config_.inner_iterations; ++pass) {
      const double before = cur.value;
      b_step(cur);
      z_step(cur);
      cur.value = value(cur.A, cur.B, cur.z);
      a_step(cur, step);
      check_finite(cur.value);
      if (cur.value > stop_above) break;
      if (cur.value - before < config_.improvement_tol * std::max(1.0, std::abs(before))) break;
    }
    return cur;
  }

  /// Largest B-norm budget left once A has spent its share of epsilon.
  double b_budget(const Matrix& A) const {
    return std::sqrt(std::max(0.0, epsilon_ * epsilon_ - (A - A_hat_).squaredNorm()));
  }

  void b_step(AdversaryResult& s) const {
    const Matrix G = ball_objective_gradient_B(s.A, s.z, ell_);
    const double g = G.norm();
    if (g <= 0.0) return;
    s.B = B_hat_ + (b_budget(s.A) / g) * G;
  }

  void z_step(AdversaryResult& s) const {
    if (pinned()) return;
    RowVector r = RowVector::Unit(s.A.rows(), ell_);
    for (int k = 0; k < tau_; ++k) {
      const Vector g = (r * s.B).transpose();
      const double gn = g.norm();
      if (gn > 0.0) s.z[tau_ - 1 - k] = center_ + (delta_ / gn) * g;
      r = r * s.A;
    }
  }

  /// Projected gradient ascent on the joint (A, B) with backtracking; a trial
  /// point is accepted only if it increases the value and keeps
  /// rho(A) <= 1 - margin.
  void a_step(AdversaryResult& s, double& step) const {
    if (epsilon_ <= 0.0) return;
    for (int it = 0; it < config_.ascent_steps; ++it) {
      const Matrix gA = ball_objective_gradient_A(s.A, s.B, s.z, x0_, ell_, config_.c, config_.sigma);
      const Matrix gB = ball_objective_gradient_B(s.A, s.z, ell_);
      const double gnorm = std::sqrt(gA.squaredNorm() + gB.squaredNorm());
      if (!(gnorm > 0.0) || !std::isfinite(gnorm)) return;
      bool accepted = false;
      for (int h = 0; h <= config_.max_halvings; ++h) {
        const double scale = step * epsilon_ / gnorm;
        Matrix DA = s.A + scale * gA - A_hat_;
        Matrix DB = s.B + scale * gB - B_hat_;
        const double norm = std::sqrt(DA.squaredNorm() + DB.squaredNorm());
        if (norm > epsilon_) {
          DA *= epsilon_ / norm;
          DB *= epsilon_ / norm;
        }
        Matrix A = A_hat_ + DA;
        Matrix B = B_hat_ + DB;
        const double v = value(A, B, s.z);
        if (v > s.value && spectral_radius(A) <= 1.0 - config_.rho_margin) {
          s.A = std::move(A);
          s.B = std::move(B);
          s.value = v;
          accepted = true;
          step = std::min(config_.initial_step, 2.0 * step);
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        step = config_.initial_step;
        return;
      }
    }
  }

  /// Makes a warm start feasible for this ball: z pulled radially into the
  /// delta-ball (or replaced by the pinned sequence), tau adjusted.
  AdversaryResult adapt(const AdversarialWitness& w, Rng& rng) const {
    AdversaryResult s;
    s.A = w.A;
    s.B = w.B;
    s.z = initial_actions(rng);
    if (!pinned()) {
      const int common = std::min<int>(tau_, static_cast<int>(w.z.size()));
      for (int k = 0; k < common; ++k) {
        // align by distance from the end of the horizon
        Vector off = w.z[w.z.size() - 1 - k] - center_;
        const double n = off.norm();
        if (n > delta_ && n > 0.0) off *= delta_ / n;
        s.z[tau_ - 1 - k] = center_ + off;
      }
    }
    s.value = value(s.A, s.B, s.z);
    return s;
  }

  std::vector<Vector> initial_actions(Rng& rng) const {
    if (pinned()) return {pinned_.begin(), pinned_.begin() + tau_};
    std::vector<Vector> z;
    z.reserve(tau_);
    for (int t = 0; t < tau_; ++t) z.push_back(rng.in_ball(center_, delta_));
    return z;
  }

  bool feasible_warm_start(const AdversarialWitness& w) const {
    if (w.A.rows() != A_hat_.rows() || w.B.cols() != B_hat_.cols()) return false;
    const double dist = std::sqrt((w.A - A_hat_).squaredNorm() + (w.B - B_hat_).squaredNorm());
    return dist <= epsilon_ + 1e-12 && spectral_radius(w.A) <= 1.0 - config_.rho_margin;
  }

  AdversarialWitness make_witness(const AdversaryResult& s) const {
    AdversarialWitness w;
    w.A = s.A;
    w.B = s.B;
    w.z = s.z;
    w.ell = ell_;
    w.tau = tau_;
    w.value = s.value;
    w.x0 = x0_;
    w.center = pinned() ? Vector() : center_;
    w.delta = pinned() ? 0.0 : delta_;
    w.epsilon = epsilon_;
    w.c = config_.c;
    w.sigma = config_.sigma;
    return w;
  }

 private:
  static void check_finite(double v) {
    if (!std::isfinite(v)) throw OptimizerError("adversarial objective became non-finite");
  }

  Matrix A_hat_;
  Matrix B_hat_;
  double epsilon_;
  Vector x0_;
  Index ell_;
  int tau_;
  const SafeBallConfig& config_;
  Vector center_;
  double delta_ = 0.0;
  std::vector<Vector> pinned_;
};

inline std::uint64_t stream_id(Index ell, int tau, int restart) {
  return (static_cast<std::uint64_t>(ell) << 40) ^ (static_cast<std::uint64_t>(tau) << 20) ^
         static_cast<std::uint64_t>(restart);
}

/// Runs every restart for one (ell, tau); returns the best point found.
inline AdversaryResult solve_subproblem(const BallAdversary& adversary, Index ell, int tau,
                                        const SafeBallConfig& config, const Rng& rng, double stop_above,
                                        const std::optional<AdversarialWitness>& warm) {
  AdversaryResult best;
  if (warm && adversary.feasible_warm_start(*warm)) {
    Rng child = rng.split(stream_id(ell, tau, 0xfffff));
    best = adversary.ascend(adversary.adapt(*warm, child), stop_above);
    if (best.value > stop_above) return best;
  }
  for (int r = 0; r < config.restarts; ++r) {
    Rng child = rng.split(stream_id(ell, tau, r));
    AdversaryResult cand = adversary.ascend(adversary.random_start(child), stop_above);
    if (cand.value > best.value) best = std::move(cand);
    if (best.value > stop_above) break;
  }
  return best;
}

inline void check_ball_inputs(const Theta& theta_hat, double epsilon, const Vector& x0, int T,
                              const SafetySpec& spec, const SafeBallConfig& config) {
  config.validate();
  require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be finite and >= 0");
  require(T >= 1, "T must be >= 1");
  require(x0.size() == theta_hat.state_dim(), "x0 dimension does not match theta");
  spec.check_dim(theta_hat.state_dim());
}

template <typename Configure>
BallCheckResult run_check(const Theta& theta_hat, double epsilon, const Vector& x0, int T,
                          const SafetySpec& spec, const SafeBallConfig& config, const Rng& rng,
                          const std::optional<AdversarialWitness>& warm, Configure&& configure) {
  BallCheckResult result;
  auto visit = [&](Index ell, int tau, const std::optional<AdversarialWitness>& w) {
    BallAdversary adversary(theta_hat, epsilon, x0, ell, tau, config);
    configure(adversary, tau);
    const double bound = spec.s[ell];
    AdversaryResult best = solve_subproblem(adversary, ell, tau, config, rng, bound, w);
    result.max_margin = std::max(result.max_margin, best.value - bound);
    if (best.value > bound) {
      result.safe = false;
      result.witness = adversary.make_witness(best);
      return true;
    }
    return false;
  };

  // A previous witness is most likely to break this ball again; try it first.
  const bool warm_usable = warm && warm->tau >= 1 && warm->tau <= T &&
                           std::find(spec.constrained.begin(), spec.constrained.end(), warm->ell) !=
                               spec.constrained.end();
  if (warm_usable && visit(warm->ell, warm->tau, warm)) return result;

  for (Index ell : spec.constrained) {
    for (int tau = 1; tau <= T; ++tau) {
      if (warm_usable && ell == warm->ell && tau == warm->tau) continue;
      if (visit(ell, tau, std::nullopt)) return result;
    }
  }
  return result;
}

}  // namespace detail

/// Approximate check that every z_0..z_{tau-1} in B_delta(u) keeps
/// E[x_tau] <= s for all tau <= T and all models in the eps-ball.
///
/// UNSAFE carries a verifiable witness. SAFE means the adversary found no
/// violation; it is a heuristic lower-bound search, not a proof.
inline BallCheckResult safe_ball_check(const Vector& u, double delta, const Theta& theta_hat, double epsilon,
                                       const Vector& x0, int T, const SafetySpec& spec,
                                       const SafeBallConfig& config, const Rng& rng,
                                       const std::optional<AdversarialWitness>& warm = std::nullopt) {
  detail::check_ball_inputs(theta_hat, epsilon, x0, T, spec, config);
  detail::require(u.size() == theta_hat.action_dim(), "u dimension does not match theta");
  detail::require(delta >= 0.0 && std::isfinite(delta), "delta must be finite and >= 0");
  return detail::run_check(theta_hat, epsilon, x0, T, spec, config, rng, warm,
                           [&](detail::BallAdversary& a, int) { a.set_ball(u, delta); });
}

/// Same adversary with z pinned to a given action sequence (only A, B move).
inline BallCheckResult sequence_safe(const Theta& theta_hat, double epsilon, const Vector& x0,
                                     const std::vector<Vector>& actions, const SafetySpec& spec,
                                     const SafeBallConfig& config, const Rng& rng) {
  const int T = static_cast<int>(actions.size());
  detail::check_ball_inputs(theta_hat, epsilon, x0, T, spec, config);
  for (const auto& a : actions)
    detail::require(a.size() == theta_hat.action_dim(), "action dimension does not match theta");
  return detail::run_check(theta_hat, epsilon, x0, T, spec, config, rng, std::nullopt,
                           [&](detail::BallAdversary& a, int tau) {
                             a.pin_actions({actions.begin(), actions.begin() + tau});
                           });
}

/// Best adversarial value for one (ell, tau), for comparisons against bounds.
inline AdversaryResult adversarial_value(const Vector& u, double delta, const Theta& theta_hat, double epsilon,
                                         const Vector& x0, Index ell, int tau, const SafeBallConfig& config,
                                         const Rng& rng) {
  config.validate();
  detail::require(ell >= 0 && ell < theta_hat.state_dim(), "ell out of range");
  detail::require(tau >= 1, "tau must be >= 1");
  detail::BallAdversary adversary(theta_hat, epsilon, x0, ell, tau, config);
  adversary.set_ball(u, delta);
  return detail::solve_subproblem(adversary, ell, tau, config, rng, std::numeric_limits<double>::infinity(),
                                  std::nullopt);
}

struct MaxSafeBallResult {
  double radius = 0.0;  ///< l: largest radius that passed
  double upper = 0.0;   ///< h: smallest radius known unsafe (or bracket top)
  int checks = 0;
  std::optional<AdversarialWitness> witness;  ///< from the last failing check
};

/// Galloping then bisection for the largest delta with a passing safe_ball_check.
///
/// Doubles delta from delta0 while the check passes, then bisects [l, h] at the
/// midpoint until h - l <= omega. Throws NominalUnsafeError when even the
/// zero-radius ball (the nominal action alone) fails.
inline MaxSafeBallResult max_safe_ball(const Theta& theta_hat, double epsilon, int T, const Vector& u_star,
                                       double delta0, double omega, const Vector& x0, const SafetySpec& spec,
                                       const SafeBallConfig& config, const Rng& rng) {
  detail::require(delta0 > 0.0, "delta0 must be positive");
  detail::require(omega > 0.0, "omega must be positive");
  MaxSafeBallResult out;
  double l = 0.0;
  double h = delta0;
  double delta = delta0;
  std::optional<AdversarialWitness> last;
  auto check = [&](double r) {
    ++out.checks;
    BallCheckResult res = safe_ball_check(u_star, r, theta_hat, epsilon, x0, T, spec, config, rng, last);
    if (!res.safe) last = res.witness;
    return res.safe;
  };

  while (check(delta)) {
    l = delta;
    h = 2.0 * delta;
    delta = 2.0 * delta;
    if (delta > config.max_radius) {
      out.radius = l;
      out.upper = h;
      return out;
    }
  }
  while (h - l > omega) {
    const double mid = 0.5 * (l + h);
    if (check(mid)) l = mid; else h = mid;
  }
  if (l == 0.0 && !check(0.0))
    throw NominalUnsafeError("the nominal action is not robustly safe at this epsilon");
  out.radius = l;
  out.upper = h;
  out.witness = std::move(last);
  return out;
}

struct WitnessCheck {
  bool model_feasible = false;
  bool actions_feasible = false;
  bool stable = false;
  bool value_matches = false;
  bool violates = false;
  double recomputed = 0.0;
  std::string diagnostic;

  bool ok() const { return model_feasible && actions_feasible && stable && value_matches && violates; }
};

/// Independent re-check of a witness: rolls the model forward with
/// expected_rollout and state_variance rather than the optimizer's objective.
inline WitnessCheck verify_witness(const AdversarialWitness& w, const Theta& theta_hat, const SafetySpec& spec,
                                   double value_tol = 1e-8, double feas_tol = 1e-9) {
  WitnessCheck out;
  auto note = [&](const std::string& s) {
    if (!out.diagnostic.empty()) out.diagnostic += "; ";
    out.diagnostic += s;
  };
  if (w.A.rows() != theta_hat.state_dim() || w.A.cols() != theta_hat.state_dim() ||
      w.B.rows() != theta_hat.state_dim() || w.B.cols() != theta_hat.action_dim() ||
      static_cast<int>(w.z.size()) != w.tau || w.tau < 1 || w.ell < 0 || w.ell >= theta_hat.state_dim() ||
      w.x0.size() != theta_hat.state_dim()) {
    out.diagnostic = "witness shapes do not match the estimate";
    return out;
  }
  const double dist = std::sqrt((w.A - theta_hat.A()).squaredNorm() + (w.B - theta_hat.B()).squaredNorm());
  out.model_feasible = dist <= w.epsilon + feas_tol;
  if (!out.model_feasible) note("model is " + std::to_string(dist) + " from theta_hat, epsilon " + std::to_string(w.epsilon));

  out.actions_feasible = true;
  if (w.center.size() > 0) {
    for (int t = 0; t < w.tau; ++t) {
      const double off = (w.z[t] - w.center).norm();
      if (off > w.delta + feas_tol) {
        out.actions_feasible = false;
        note("z_" + std::to_string(t) + " is " + std::to_string(off) + " from the center, delta " +
             std::to_string(w.delta));
        break;
      }
    }
  }
  const double rho = spectral_radius(w.A);
  out.stable = rho < 1.0;
  if (!out.stable) note("rho(A) = " + std::to_string(rho));

  const auto traj = expected_rollout(w.A, w.B, w.x0, w.z);
  out.recomputed = traj.back()[w.ell];
  if (w.c > 0.0) out.recomputed += w.c * std::sqrt(state_variance(w.A, w.sigma, w.tau, w.ell));
  out.value_matches = std::abs(out.recomputed - w.value) <= value_tol * std::max(1.0, std::abs(w.value));
  if (!out.value_matches)
    note("recomputed value " + std::to_string(out.recomputed) + " differs from recorded " + std::to_string(w.value));
  spec.check_dim(theta_hat.state_dim());
  out.violates = out.recomputed > spec.s[w.ell];
  if (!out.violates) note("recomputed value does not exceed the bound");
  return out;
}

}  // namespace safex
