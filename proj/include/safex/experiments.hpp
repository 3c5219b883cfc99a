#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "safex/ball_optimizer.hpp"
#include "safex/estimator.hpp"
#include "safex/exploration.hpp"
#include "safex/io.hpp"
#include "safex/model.hpp"
#include "safex/safety_bounds.hpp"
#include "safex/simulator.hpp"

namespace safex {

/// Settings shared by every CLI command. Defaults reproduce the desk-scale
/// synthetic setup.
struct ExperimentConfig {
  // model source: a JSON file, or generated
  std::optional<std::string> model_file;
  Index d = 5;
  Index d_prime = 2;
  double rho = 0.9;
  std::uint64_t model_seed = 1;
  double b_range = 0.125;
  double sigma = 0.01;

  // nominal action and constraint
  std::optional<Vector> u_star;
  double u_norm = 2.0;
  std::optional<Vector> x0;
  Index constrained_index = 0;
  double headroom = 0.5;
  double margin_sds = 2.0;  ///< required headroom in steady-state standard deviations

  int T = 20;
  double alpha = 0.05;
  double gamma = 0.05;
  bool high_probability = false;  ///< add c * sigma * sqrt(Var) with c from gamma
  double omega = 0.05;
  double delta0 = 0.1;
  int cadence = 100;
  int total_episodes = 1000;
  std::size_t capacity = 14;
  double min_radius = 0.2;
  bool use_sigma_hat = false;

  std::vector<double> epsilon_grid;           ///< absolute; overrides the relative grid
  std::vector<double> epsilon_relative_grid;  ///< fractions of ||theta*||_F
  int fig2_seeds = 11;
  std::vector<Index> fig3_checkpoints = {2000, 8000, 14000, 20000};
  int simulate_episodes = 100;

  SafeBallConfig ball;

  ExperimentConfig() {
    epsilon_relative_grid = {0.0,   0.00025, 0.0005, 0.001, 0.0015, 0.002,  0.003,  0.004,
                             0.005, 0.0075,  0.01,   0.0125, 0.015, 0.0175, 0.02,   0.0215};
  }

  void validate() const {
    detail::require(d >= 1 && d_prime >= 1, "d and d_prime must be >= 1");
    detail::require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
    detail::require(b_range > 0.0, "b_range must be positive");
    detail::require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be finite and >= 0");
    detail::require(u_norm > 0.0, "u_norm must be positive");
    detail::require(headroom > 0.0, "headroom must be positive");
    detail::require(margin_sds >= 0.0, "margin_sds must be >= 0");
    detail::require(T >= 1, "T must be >= 1");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    detail::require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    detail::require(omega > 0.0, "omega must be positive");
    detail::require(delta0 > 0.0, "delta0 must be positive");
    detail::require(cadence >= 1 && total_episodes >= 1, "cadence and total_episodes must be >= 1");
    detail::require(capacity >= 1, "capacity must be >= 1");
    detail::require(min_radius >= 0.0, "min_radius must be >= 0");
    detail::require(fig2_seeds >= 1, "fig2_seeds must be >= 1");
    detail::require(simulate_episodes >= 1, "simulate_episodes must be >= 1");
    for (double e : epsilon_grid) detail::require(e >= 0.0 && std::isfinite(e), "epsilon grid entries must be >= 0");
    for (double e : epsilon_relative_grid)
      detail::require(e >= 0.0 && std::isfinite(e), "relative epsilon grid entries must be >= 0");
    detail::require(!epsilon_grid.empty() || !epsilon_relative_grid.empty(), "epsilon grid is empty");
    for (Index n : fig3_checkpoints) detail::require(n >= 1, "fig3 checkpoints must be >= 1");
    ball.validate();
  }

  /// Exploration settings derived from this config.
  ExplorationConfig exploration(ExplorationMode mode) const {
    ExplorationConfig out;
    out.mode = mode;
    out.total_episodes = total_episodes;
    out.cadence = cadence;
    out.T = T;
    out.alpha = alpha;
    out.delta0 = delta0;
    out.omega = omega;
    out.capacity = capacity;
    out.min_radius = min_radius;
    out.use_sigma_hat = use_sigma_hat;
    out.ball = ball;
    out.ball.omega = omega;
    return out;
  }
};

namespace detail {

template <typename T>
void read_opt(const io::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "model_file", "d",        "d_prime",  "rho",          "model_seed",  "b_range",
      "sigma",      "u_star",   "u_norm",   "x0",           "constrained_index", "headroom",
      "margin_sds", "T",        "alpha",    "gamma",        "high_probability",  "omega",
      "delta0",     "cadence",  "total_episodes", "capacity", "min_radius", "use_sigma_hat",
      "epsilon_grid", "epsilon_relative_grid", "fig2_seeds", "fig3_checkpoints", "simulate_episodes",
      "optimizer"};
  return keys;
}

}  // namespace detail

/// Parses a config object. Unknown keys are rejected so typos surface.
inline ExperimentConfig config_from_json(const io::json& j) {
  detail::require(j.is_object(), "config must be a JSON object");
  for (const auto& item : j.items())
    detail::require(detail::known_config_keys().count(item.key()) > 0, "unknown config key '" + item.key() + "'");
  ExperimentConfig c;
  try {
    if (j.contains("model_file")) c.model_file = j.at("model_file").get<std::string>();
    detail::read_opt(j, "d", c.d);
    detail::read_opt(j, "d_prime", c.d_prime);
    detail::read_opt(j, "rho", c.rho);
    detail::read_opt(j, "model_seed", c.model_seed);
    detail::read_opt(j, "b_range", c.b_range);
    detail::read_opt(j, "sigma", c.sigma);
    if (j.contains("u_star")) c.u_star = io::vector_from_json(j.at("u_star"));
    detail::read_opt(j, "u_norm", c.u_norm);
    if (j.contains("x0")) c.x0 = io::vector_from_json(j.at("x0"));
    detail::read_opt(j, "constrained_index", c.constrained_index);
    detail::read_opt(j, "headroom", c.headroom);
    detail::read_opt(j, "margin_sds", c.margin_sds);
    detail::read_opt(j, "T", c.T);
    detail::read_opt(j, "alpha", c.alpha);
    detail::read_opt(j, "gamma", c.gamma);
    detail::read_opt(j, "high_probability", c.high_probability);
    detail::read_opt(j, "omega", c.omega);
    detail::read_opt(j, "delta0", c.delta0);
    detail::read_opt(j, "cadence", c.cadence);
    detail::read_opt(j, "total_episodes", c.total_episodes);
    detail::read_opt(j, "capacity", c.capacity);
    detail::read_opt(j, "min_radius", c.min_radius);
    detail::read_opt(j, "use_sigma_hat", c.use_sigma_hat);
    detail::read_opt(j, "epsilon_grid", c.epsilon_grid);
    detail::read_opt(j, "epsilon_relative_grid", c.epsilon_relative_grid);
    detail::read_opt(j, "fig2_seeds", c.fig2_seeds);
    detail::read_opt(j, "fig3_checkpoints", c.fig3_checkpoints);
    detail::read_opt(j, "simulate_episodes", c.simulate_episodes);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      detail::require(o.is_object(), "optimizer must be a JSON object");
      detail::read_opt(o, "restarts", c.ball.restarts);
      detail::read_opt(o, "inner_iterations", c.ball.inner_iterations);
      detail::read_opt(o, "ascent_steps", c.ball.ascent_steps);
      detail::read_opt(o, "initial_step", c.ball.initial_step);
      detail::read_opt(o, "max_halvings", c.ball.max_halvings);
      detail::read_opt(o, "rho_margin", c.ball.rho_margin);
      detail::read_opt(o, "improvement_tol", c.ball.improvement_tol);
      detail::read_opt(o, "init_attempts", c.ball.init_attempts);
      detail::read_opt(o, "max_radius", c.ball.max_radius);
    }
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

/// True model, nominal action, start state and constraint for one experiment.
struct Problem {
  LinearGaussianModel model;
  Vector u_star;
  Vector x0;
  SafetySpec spec;
};

inline io::json to_json(const Problem& p) {
  return io::json{{"model", io::to_json(p.model)},
                  {"u_star", io::to_json(p.u_star)},
                  {"x0", io::to_json(p.x0)},
                  {"spec", io::to_json(p.spec)}};
}

inline Problem problem_from_json(const io::json& j) {
  try {
    Problem p{io::model_from_json(j.at("model")), io::vector_from_json(j.at("u_star")),
              io::vector_from_json(j.at("x0")), io::spec_from_json(j.at("spec"))};
    detail::require(p.u_star.size() == p.model.action_dim(), "u_star dimension does not match the model");
    detail::require(p.x0.size() == p.model.state_dim(), "x0 dimension does not match the model");
    p.spec.check_dim(p.model.state_dim());
    return p;
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("bad problem JSON: ") + e.what());
  }
}

/// Builds the experiment problem.
///
/// u* defaults to u_norm times a random unit direction, x0 to the steady state
/// under u*, and the single constrained coordinate gets s = steady state +
/// headroom. The headroom must cover margin_sds steady-state standard
/// deviations, otherwise the nominal action is rejected.
inline Problem build_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  LinearGaussianModel model = cfg.model_file
                                  ? io::model_from_json(io::read_json(*cfg.model_file))
                                  : random_stable_model(cfg.d, cfg.d_prime, cfg.rho, cfg.model_seed, cfg.sigma,
                                                        cfg.b_range);
  if (!model.schur_stable())
    throw StabilityError("true model is not Schur stable (rho = " + std::to_string(spectral_radius(model.A)) + ")");
  const Index d = model.state_dim();
  const Index dp = model.action_dim();
  detail::require(cfg.constrained_index >= 0 && cfg.constrained_index < d, "constrained_index out of range");

  Vector u_star;
  if (cfg.u_star) {
    u_star = *cfg.u_star;
    detail::require(u_star.size() == dp, "u_star dimension does not match the model");
  } else {
    Rng rng = Rng(cfg.model_seed).split(1);
    u_star = cfg.u_norm * rng.unit_sphere(dp);
  }
  const Vector steady = steady_state_expectation(model, u_star);
  Vector x0 = cfg.x0 ? *cfg.x0 : steady;
  detail::require(x0.size() == d, "x0 dimension does not match the model");

  const Index ell = cfg.constrained_index;
  const double sd = std::sqrt(steady_state_variance(model.A, model.sigma, ell));
  if (cfg.headroom < cfg.margin_sds * sd)
    throw NominalUnsafeError("headroom " + std::to_string(cfg.headroom) + " is below " +
                             std::to_string(cfg.margin_sds) + " steady-state standard deviations (" +
                             std::to_string(sd) + ")");
  return Problem{std::move(model), std::move(u_star), std::move(x0),
                 SafetySpec::single(d, ell, steady[ell] + cfg.headroom)};
}

/// Optimizer settings with the confidence multiplier applied when requested.
inline SafeBallConfig ball_config(const ExperimentConfig& cfg, double sigma) {
  SafeBallConfig b = cfg.ball;
  b.omega = cfg.omega;
  if (cfg.high_probability) {
    b.c = confidence_multiplier(cfg.gamma, cfg.T);
    b.sigma = sigma;
  }
  return b;
}

// ------------------------------------------------------------------- fig1

struct Fig1Point {
  double epsilon = 0.0;
  double delta_max = 0.0;
};

/// MaxSafeBall around u* with theta_hat = theta*, over the epsilon grid.
/// A nominal failure at epsilon = 0 is an assumption violation; at larger
/// epsilon it is recorded as radius 0.
inline std::vector<Fig1Point> run_fig1(const ExperimentConfig& cfg, const Problem& p, std::uint64_t seed) {
  const Theta theta = p.model.theta();
  std::vector<double> grid = cfg.epsilon_grid;
  if (grid.empty())
    for (double r : cfg.epsilon_relative_grid) grid.push_back(r * theta.norm());
  const SafeBallConfig bc = ball_config(cfg, p.model.sigma);
  std::vector<Fig1Point> out;
  for (double eps : grid) {
    Fig1Point pt{eps, 0.0};
    try {
      pt.delta_max = max_safe_ball(theta, eps, cfg.T, p.u_star, cfg.delta0, cfg.omega, p.x0, p.spec, bc, Rng(seed)).radius;
    } catch (const NominalUnsafeError&) {
      if (eps == 0.0) throw;
    }
    out.push_back(pt);
  }
  return out;
}

inline std::string fig1_csv(const std::vector<Fig1Point>& pts) {
  std::ostringstream o;
  o << "epsilon,delta_max\n";
  for (const auto& p : pts) o << io::fmt(p.epsilon) << "," << io::fmt(p.delta_max) << "\n";
  return o.str();
}

inline std::string fig1_svg(const std::vector<Fig1Point>& pts) {
  io::Series s{"delta_max", "#1f77b4", {}, {}};
  for (const auto& p : pts) {
    s.x.push_back(p.epsilon);
    s.y.push_back(p.delta_max);
  }
  return io::line_chart_svg("Largest certified ball vs model error", "epsilon", "delta_max", {s});
}

// ------------------------------------------------------------------- fig2

struct Fig2Run {
  int seed_index = 0;
  ExplorationMode mode = ExplorationMode::single;
  std::vector<UpdateRecord> records;
  std::vector<std::string> warnings;
};

struct Fig2Row {
  ExplorationMode mode = ExplorationMode::single;
  Index n = 0;
  double eps_theoretical = 0.0;
  double eps_actual = 0.0;
};

struct Fig2Result {
  std::vector<Fig2Run> runs;
  std::vector<Fig2Row> medians;  ///< per (mode, n), across seeds
};

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// One exploration run; seed stream `index` of `seed`.
inline Fig2Run run_mode(const ExperimentConfig& cfg, const Problem& p, ExplorationMode mode, std::uint64_t seed,
                        int index) {
  ExplorationConfig ec = cfg.exploration(mode);
  ec.ball = ball_config(cfg, p.model.sigma);
  ExplorationRun run = run_exploration(SimulatedEnvironment{p.model, p.x0}, p.u_star, p.spec, ec,
                                       Rng(seed).split(static_cast<std::uint64_t>(index)));
  return Fig2Run{index, mode, std::move(run.records), std::move(run.warnings)};
}

/// Both modes on the same noise streams for each seed index.
inline Fig2Result run_fig2(const ExperimentConfig& cfg, const Problem& p, std::uint64_t seed) {
  Fig2Result out;
  for (int s = 0; s < cfg.fig2_seeds; ++s)
    for (ExplorationMode mode : {ExplorationMode::single, ExplorationMode::multi})
      out.runs.push_back(run_mode(cfg, p, mode, seed, s));
  for (ExplorationMode mode : {ExplorationMode::single, ExplorationMode::multi}) {
    std::map<Index, std::pair<std::vector<double>, std::vector<double>>> by_n;
    for (const auto& r : out.runs)
      if (r.mode == mode)
        for (const auto& rec : r.records) {
          by_n[rec.n].first.push_back(rec.eps_theoretical);
          by_n[rec.n].second.push_back(rec.eps_actual);
        }
    for (const auto& [n, v] : by_n) out.medians.push_back(Fig2Row{mode, n, median(v.first), median(v.second)});
  }
  return out;
}

inline std::string fig2_csv(const Fig2Result& r) {
  std::ostringstream o;
  o << "mode,n,eps_theoretical,eps_actual\n";
  for (const auto& row : r.medians)
    o << to_string(row.mode) << "," << row.n << "," << io::fmt(row.eps_theoretical) << "," << io::fmt(row.eps_actual)
      << "\n";
  return o.str();
}

/// Per-seed update records.
inline std::string fig2_runs_csv(const Fig2Result& r) {
  std::ostringstream o;
  o << "seed,mode,n,eps_theoretical,eps_actual,n_balls,min_radius,max_radius\n";
  for (const auto& run : r.runs)
    for (const auto& rec : run.records) {
      double lo = rec.balls.front().radius, hi = lo;
      for (const auto& b : rec.balls) {
        lo = std::min(lo, b.radius);
        hi = std::max(hi, b.radius);
      }
      o << run.seed_index << "," << to_string(run.mode) << "," << rec.n << "," << io::fmt(rec.eps_theoretical) << ","
        << io::fmt(rec.eps_actual) << "," << rec.balls.size() << "," << io::fmt(lo) << "," << io::fmt(hi) << "\n";
    }
  return o.str();
}

inline std::string fig2_svg(const Fig2Result& r) {
  std::vector<io::Series> series;
  for (ExplorationMode mode : {ExplorationMode::single, ExplorationMode::multi}) {
    const std::string color = mode == ExplorationMode::single ? "#d62728" : "#1f77b4";
    io::Series t{std::string(to_string(mode)) + " eps_theoretical", color, {}, {}, true};
    io::Series a{std::string(to_string(mode)) + " eps_actual", color, {}, {}, false};
    for (const auto& row : r.medians)
      if (row.mode == mode) {
        t.x.push_back(static_cast<double>(row.n));
        t.y.push_back(row.eps_theoretical);
        a.x.push_back(static_cast<double>(row.n));
        a.y.push_back(row.eps_actual);
      }
    series.push_back(std::move(t));
    series.push_back(std::move(a));
  }
  return io::line_chart_svg("Model error vs samples (median over seeds)", "n", "error", series);
}

// ------------------------------------------------------------------- fig3

struct Fig3Snapshot {
  ExplorationMode mode = ExplorationMode::single;
  Index checkpoint = 0;  ///< requested n
  Index n = 0;           ///< n of the record used (last one at or before the checkpoint)
  std::vector<ActionBall> balls;
};

struct Fig3Result {
  std::vector<Fig3Snapshot> snapshots;
  std::vector<std::string> warnings;
};

inline Fig3Result run_fig3(const ExperimentConfig& cfg, const Problem& p, std::uint64_t seed) {
  Fig3Result out;
  if (p.model.action_dim() != 2)
    out.warnings.push_back("action dimension is " + std::to_string(p.model.action_dim()) +
                           "; plotting the first two coordinates");
  for (ExplorationMode mode : {ExplorationMode::single, ExplorationMode::multi}) {
    const Fig2Run run = run_mode(cfg, p, mode, seed, 0);
    for (Index cp : cfg.fig3_checkpoints) {
      const UpdateRecord* hit = nullptr;
      for (const auto& rec : run.records)
        if (rec.n <= cp) hit = &rec;
      if (!hit) throw ValidationError("no registry update at or before n = " + std::to_string(cp));
      out.snapshots.push_back(Fig3Snapshot{mode, cp, hit->n, hit->balls});
    }
    for (const auto& w : run.warnings) out.warnings.push_back(std::string(to_string(mode)) + ": " + w);
  }
  return out;
}

inline io::json fig3_json(const Fig3Result& r) {
  io::json out = io::json::array();
  for (const auto& s : r.snapshots)
    out.push_back(io::json{{"mode", to_string(s.mode)}, {"checkpoint", s.checkpoint}, {"n", s.n},
                           {"balls", io::to_json(s.balls)}});
  return out;
}

/// One row per (mode, checkpoint).
inline std::string fig3_csv(const Fig3Result& r) {
  std::ostringstream o;
  o << "mode,checkpoint,n,n_balls,min_radius,max_radius\n";
  for (const auto& s : r.snapshots) {
    double lo = s.balls.front().radius, hi = lo;
    for (const auto& b : s.balls) {
      lo = std::min(lo, b.radius);
      hi = std::max(hi, b.radius);
    }
    o << to_string(s.mode) << "," << s.checkpoint << "," << s.n << "," << s.balls.size() << "," << io::fmt(lo) << ","
      << io::fmt(hi) << "\n";
  }
  return o.str();
}

inline std::string fig3_svg(const Fig3Result& r, std::size_t checkpoints) {
  std::vector<io::CirclePanel> panels;
  for (const auto& s : r.snapshots)
    panels.push_back({std::string(to_string(s.mode)) + " n=" + std::to_string(s.n), s.balls});
  return io::circle_panels_svg(panels, static_cast<int>(std::max<std::size_t>(1, checkpoints)));
}

// ---------------------------------------------------------- data commands

/// Episodes drawn uniformly from the nominal ball B_delta0(u*).
inline EpisodeLog simulate_episodes(const ExperimentConfig& cfg, const Problem& p, std::uint64_t seed) {
  EpisodeLog log(seed, "problem");
  const ActionBall ball(p.u_star, cfg.delta0);
  const Policy policy = [&ball](const Vector&, int, Rng& r) { return r.in_ball(ball.center, ball.radius); };
  Rng rng(seed);
  for (int e = 0; e < cfg.simulate_episodes; ++e) {
    Rng ep = rng.split(static_cast<std::uint64_t>(e));
    log.append(run_episode(p.model, p.x0, policy, cfg.T, ep));
  }
  return log;
}

}  // namespace safex
