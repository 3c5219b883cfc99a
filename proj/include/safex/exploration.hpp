#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "safex/ball_optimizer.hpp"
#include "safex/estimator.hpp"
#include "safex/model.hpp"
#include "safex/random.hpp"
#include "safex/simulator.hpp"

namespace safex {

/// Certified safe balls; balls.front() is always the nominal ball around u*.
struct BallRegistry {
  std::vector<ActionBall> balls;
  std::size_t capacity = 14;
  double min_radius = 0.2;

  BallRegistry() = default;
  BallRegistry(ActionBall nominal, std::size_t cap, double min_r) : capacity(cap), min_radius(min_r) {
    detail::require(cap >= 1, "registry capacity must be >= 1");
    detail::require(min_r >= 0.0, "min_radius must be >= 0");
    balls.push_back(std::move(nominal));
  }

  const ActionBall& nominal() const { return balls.front(); }
  bool full() const { return balls.size() >= capacity; }
};

/// Two independent uniform points on the surface of one uniformly chosen ball.
inline std::array<Vector, 2> spawn_candidates(const BallRegistry& registry, Rng& rng) {
  detail::require(!registry.balls.empty(), "registry is empty");
  const ActionBall& ball = registry.balls[rng.index(registry.balls.size())];
  const Index n = ball.center.size();
  Vector a = ball.center + ball.radius * rng.unit_sphere(n);
  Vector b = ball.center + ball.radius * rng.unit_sphere(n);
  return {std::move(a), std::move(b)};
}

/// Uniform ball choice, then a volume-uniform point inside it.
inline Vector sample_action(const BallRegistry& registry, Rng& rng) {
  detail::require(!registry.balls.empty(), "registry is empty");
  const ActionBall& ball = registry.balls[rng.index(registry.balls.size())];
  return rng.in_ball(ball.center, ball.radius);
}

/// Everything max_safe_ball needs besides the ball center.
struct CertificationContext {
  Theta theta_hat;
  double epsilon = 0.0;
  int T = 20;
  Vector x0;
  SafetySpec spec;
  SafeBallConfig config;
  double delta0 = 0.1;
  double omega = 0.05;
};

struct RegistryUpdate {
  BallRegistry registry;
  std::vector<std::string> warnings;
};

namespace detail {

/// max_safe_ball radius, or nullopt (with a warning) when the center itself
/// fails or the optimizer gives up.
inline std::optional<double> certify(const CertificationContext& ctx, const Vector& center, const Rng& rng,
                                     std::vector<std::string>& warnings) {
  try {
    return max_safe_ball(ctx.theta_hat, ctx.epsilon, ctx.T, center, ctx.delta0, ctx.omega, ctx.x0, ctx.spec,
                         ctx.config, rng)
        .radius;
  } catch (const NominalUnsafeError&) {
    warnings.push_back("center is not robustly safe at epsilon " + std::to_string(ctx.epsilon));
  } catch (const OptimizerError& e) {
    warnings.push_back(std::string("optimizer error: ") + e.what());
  }
  return std::nullopt;
}

}  // namespace detail

/// Recertifies every ball under the current estimate, then (if `spawn`) tries
/// two new candidates on the surface of a random ball.
///
/// Non-nominal balls that fall below min_radius or fail are dropped. The
/// nominal ball is never dropped; it keeps whatever radius it recertifies to
/// (0 when even u* fails).
inline RegistryUpdate update_registry(const BallRegistry& registry, const CertificationContext& ctx, const Rng& rng,
                                      bool spawn = true) {
  detail::require(!registry.balls.empty(), "registry is empty");
  RegistryUpdate out;
  out.registry.capacity = registry.capacity;
  out.registry.min_radius = registry.min_radius;

  for (std::size_t i = 0; i < registry.balls.size(); ++i) {
    const ActionBall& ball = registry.balls[i];
    const auto radius = detail::certify(ctx, ball.center, rng.split(i), out.warnings);
    if (i == 0) {
      out.registry.balls.emplace_back(ball.center, radius.value_or(0.0));
    } else if (radius && *radius >= registry.min_radius) {
      out.registry.balls.emplace_back(ball.center, *radius);
    } else {
      out.warnings.push_back("dropping ball " + std::to_string(i) + " (recertified radius " +
                             std::to_string(radius.value_or(0.0)) + ")");
    }
  }

  if (spawn && !out.registry.full()) {
    Rng spawn_rng = rng.split(0x5eed);
    const auto candidates = spawn_candidates(out.registry, spawn_rng);
    for (std::size_t k = 0; k < candidates.size() && !out.registry.full(); ++k) {
      const auto radius = detail::certify(ctx, candidates[k], rng.split(1000 + k), out.warnings);
      if (radius && *radius >= registry.min_radius) out.registry.balls.emplace_back(candidates[k], *radius);
    }
  }
  return out;
}

enum class ExplorationMode { single, multi };

inline const char* to_string(ExplorationMode m) { return m == ExplorationMode::single ? "single" : "multi"; }

/// Source of transitions. In simulation the true parameters are known, which
/// makes the actual error ||theta_hat - theta*||_F computable.
struct SimulatedEnvironment {
  LinearGaussianModel truth;
  Vector x0;  ///< every episode restarts here
};

struct ExplorationConfig {
  ExplorationMode mode = ExplorationMode::multi;
  int total_episodes = 1000;
  int cadence = 100;  ///< episodes between refits
  int T = 20;
  double alpha = 0.05;
  double delta0 = 0.1;
  double omega = 0.05;
  std::size_t capacity = 14;
  double min_radius = 0.2;
  bool use_sigma_hat = false;
  SafeBallConfig ball;

  void validate() const {
    detail::require(total_episodes >= 1, "total_episodes must be >= 1");
    detail::require(cadence >= 1, "cadence must be >= 1");
    detail::require(T >= 1, "T must be >= 1");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    detail::require(delta0 > 0.0, "delta0 must be positive");
    detail::require(omega > 0.0, "omega must be positive");
    detail::require(capacity >= 1, "capacity must be >= 1");
    ball.validate();
  }
};

struct UpdateRecord {
  Index n = 0;
  double eps_theoretical = 0.0;
  double eps_actual = 0.0;
  std::vector<ActionBall> balls;
};

struct ExplorationRun {
  std::vector<UpdateRecord> records;
  EpisodeLog log;
  std::vector<ActionBall> episode_balls;  ///< ball each episode drew its actions from
  std::vector<std::string> warnings;
};

/// Collect `cadence` episodes, refit, recompute epsilon, update the registry;
/// repeat until total_episodes. Emits one record per refit.
///
/// Each episode picks one ball and draws all T actions i.i.d. inside it. In
/// single mode only the nominal ball exists. A rank-deficient fit is retried
/// once after one more block drawn from the nominal ball only.
inline ExplorationRun run_exploration(const SimulatedEnvironment& env, const Vector& u_star, const SafetySpec& spec,
                                      const ExplorationConfig& config, const Rng& rng) {
  config.validate();
  env.truth.validate();
  spec.check_dim(env.truth.state_dim());
  detail::require(u_star.size() == env.truth.action_dim(), "u_star dimension does not match the model");
  detail::require(env.x0.size() == env.truth.state_dim(), "x0 dimension does not match the model");

  const bool multi = config.mode == ExplorationMode::multi;
  BallRegistry registry(ActionBall(u_star, config.delta0), multi ? config.capacity : 1, config.min_radius);
  const Theta truth = env.truth.theta();

  ExplorationRun run;
  run.log = EpisodeLog(rng.seed(), "simulated");
  bool nominal_only = false;
  bool retried = false;
  int episode = 0;
  int block = 0;
  while (episode < config.total_episodes) {
    const int in_block = std::min(config.cadence, config.total_episodes - episode);
    for (int e = 0; e < in_block; ++e, ++episode) {
      Rng ep_rng = rng.split(static_cast<std::uint64_t>(episode));
      const ActionBall ball = nominal_only ? registry.nominal() : registry.balls[ep_rng.index(registry.balls.size())];
      Policy policy = [&ball](const Vector&, int, Rng& r) { return r.in_ball(ball.center, ball.radius); };
      run.log.append(run_episode(env.truth, env.x0, policy, config.T, ep_rng));
      run.episode_balls.push_back(ball);
    }

    ModelEstimate est;
    try {
      est = estimate_model(run.log.training_data());
      if (!(est.lambda_min > 0.0)) throw EstimationError("second-moment matrix is not positive definite");
    } catch (const EstimationError& e) {
      if (retried) throw;
      retried = true;
      nominal_only = true;
      run.warnings.push_back(std::string("fit failed, one more nominal block: ") + e.what());
      ++block;
      continue;
    }
    nominal_only = false;

    const double sigma = config.use_sigma_hat ? est.sigma_hat : env.truth.sigma;
    const ErrorBound bound = epsilon_bound(est, config.alpha, sigma);

    CertificationContext ctx;
    ctx.theta_hat = est.theta_hat;
    ctx.epsilon = bound.epsilon;
    ctx.T = config.T;
    ctx.x0 = env.x0;
    ctx.spec = spec;
    ctx.config = config.ball;
    ctx.delta0 = config.delta0;
    ctx.omega = config.omega;

    RegistryUpdate upd = update_registry(registry, ctx, rng.split(0xb10c000000ULL + block), multi);
    registry = std::move(upd.registry);
    for (auto& w : upd.warnings) run.warnings.push_back("n=" + std::to_string(est.n) + ": " + w);

    UpdateRecord rec;
    rec.n = est.n;
    rec.eps_theoretical = bound.epsilon;
    rec.eps_actual = frobenius_distance(est.theta_hat, truth);
    rec.balls = registry.balls;
    run.records.push_back(std::move(rec));
    ++block;
  }
  return run;
}

}  // namespace safex
