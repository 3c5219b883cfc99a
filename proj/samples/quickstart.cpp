// Identify a small system from nominal-ball data, then certify a ball of
// actions around the nominal action under the fitted model.
#include <iostream>

#include "safex/experiments.hpp"

int main() {
  using namespace safex;
  ExperimentConfig cfg;
  cfg.simulate_episodes = 200;
  const Problem p = build_problem(cfg);

  const EpisodeLog log = simulate_episodes(cfg, p, 42);
  const ModelEstimate est = estimate_model(log.training_data());
  const ErrorBound bound = epsilon_bound(est, cfg.alpha, p.model.sigma);
  std::cout << "n = " << est.n << ", epsilon = " << bound.epsilon
            << ", actual error = " << frobenius_distance(est.theta_hat, p.model.theta()) << "\n";

  try {
    const MaxSafeBallResult ball = max_safe_ball(est.theta_hat, bound.epsilon, cfg.T, p.u_star, cfg.delta0,
                                                 cfg.omega, p.x0, p.spec, cfg.ball, Rng(7));
    std::cout << "certified radius around u*: " << ball.radius << "\n";
  } catch (const NominalUnsafeError& e) {
    std::cout << "u* cannot be certified yet: " << e.what() << "\n";
  }
}
