#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "safex/experiments.hpp"

namespace fs = std::filesystem;
using namespace safex;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kValidation = 2;
constexpr int kAssumption = 3;
constexpr int kOptimizer = 4;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
};

ExperimentConfig load_config(const Globals& g) {
  if (g.config_path.empty()) return ExperimentConfig{};
  return config_from_json(io::read_json(g.config_path));
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

Problem load_problem(const ExperimentConfig& cfg, const std::string& path) {
  return path.empty() ? build_problem(cfg) : problem_from_json(io::read_json(path));
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_fig1(const Globals& g) {
  const ExperimentConfig cfg = load_config(g);
  const Problem p = build_problem(cfg);
  const auto pts = run_fig1(cfg, p, g.seed);
  io::write_text(out_path(g, "fig1.csv"), fig1_csv(pts));
  io::write_text(out_path(g, "fig1.svg"), fig1_svg(pts));
  io::write_json(out_path(g, "problem.json"), to_json(p));
  for (const auto& pt : pts) std::cout << "epsilon " << pt.epsilon << "  delta_max " << pt.delta_max << "\n";
  return kOk;
}

int cmd_fig2(const Globals& g) {
  const ExperimentConfig cfg = load_config(g);
  const Problem p = build_problem(cfg);
  const Fig2Result r = run_fig2(cfg, p, g.seed);
  io::write_text(out_path(g, "fig2.csv"), fig2_csv(r));
  io::write_text(out_path(g, "fig2_runs.csv"), fig2_runs_csv(r));
  io::write_text(out_path(g, "fig2.svg"), fig2_svg(r));
  for (const auto& run : r.runs) print_warnings(run.warnings);
  for (const auto& row : r.medians)
    std::cout << to_string(row.mode) << " n=" << row.n << " eps_theoretical=" << row.eps_theoretical
              << " eps_actual=" << row.eps_actual << "\n";
  return kOk;
}

int cmd_fig3(const Globals& g) {
  const ExperimentConfig cfg = load_config(g);
  const Problem p = build_problem(cfg);
  const Fig3Result r = run_fig3(cfg, p, g.seed);
  io::write_json(out_path(g, "fig3.json"), fig3_json(r));
  io::write_text(out_path(g, "fig3.csv"), fig3_csv(r));
  io::write_text(out_path(g, "fig3.svg"), fig3_svg(r, cfg.fig3_checkpoints.size()));
  print_warnings(r.warnings);
  for (const auto& s : r.snapshots)
    std::cout << to_string(s.mode) << " n=" << s.n << " balls=" << s.balls.size() << "\n";
  return kOk;
}

int cmd_simulate(const Globals& g, std::optional<int> episodes) {
  ExperimentConfig cfg = load_config(g);
  if (episodes) cfg.simulate_episodes = *episodes;
  cfg.validate();
  const Problem p = build_problem(cfg);
  const EpisodeLog log = simulate_episodes(cfg, p, g.seed);
  io::write_json(out_path(g, "problem.json"), to_json(p));
  io::write_json(out_path(g, "model.json"), io::to_json(p.model));
  io::write_text(out_path(g, "episodes.csv"), io::episodes_csv(log));
  std::cout << "wrote " << log.trajectories().size() << " episodes (" << log.triple_count() << " transitions)\n";
  return kOk;
}

int cmd_estimate(const Globals& g, const std::string& episodes_path, std::optional<double> sigma) {
  const ExperimentConfig cfg = load_config(g);
  std::ifstream in(episodes_path);
  if (!in) throw ValidationError("cannot open " + episodes_path);
  const EpisodeLog log = io::episodes_from_csv(in);
  const ModelEstimate est = estimate_model(log.training_data());
  const ErrorBound bound = sigma ? epsilon_bound(est, cfg.alpha, *sigma) : epsilon_bound(est, cfg.alpha);
  io::write_json(out_path(g, "estimate.json"), io::to_json(est, bound));
  std::cout << "n=" << est.n << " sigma_hat=" << est.sigma_hat << " lambda_min=" << est.lambda_min
            << " epsilon=" << bound.epsilon << "\n";
  return kOk;
}

int cmd_maxball(const Globals& g, const std::string& estimate_path, const std::string& problem_path,
                std::optional<double> epsilon) {
  const ExperimentConfig cfg = load_config(g);
  const Problem p = load_problem(cfg, problem_path);
  const io::StoredEstimate stored = io::estimate_from_json(io::read_json(estimate_path));
  const double eps = epsilon.value_or(stored.bound.epsilon);
  const SafeBallConfig bc = ball_config(cfg, p.model.sigma);
  const MaxSafeBallResult r = max_safe_ball(stored.estimate.theta_hat, eps, cfg.T, p.u_star, cfg.delta0, cfg.omega,
                                            p.x0, p.spec, bc, Rng(g.seed));
  io::write_json(out_path(g, "maxball.json"), io::json{{"center", io::to_json(p.u_star)},
                                                       {"radius", r.radius},
                                                       {"upper", r.upper},
                                                       {"checks", r.checks},
                                                       {"epsilon", eps}});
  if (r.witness) io::write_json(out_path(g, "witness.json"), io::to_json(*r.witness));
  std::cout << "radius " << r.radius << " (upper " << r.upper << ", " << r.checks << " checks)\n";
  return kOk;
}

int cmd_verify(const Globals& g, const std::string& witness_path, const std::string& estimate_path,
               const std::string& problem_path) {
  const ExperimentConfig cfg = load_config(g);
  const Problem p = load_problem(cfg, problem_path);
  const io::StoredEstimate stored = io::estimate_from_json(io::read_json(estimate_path));
  const AdversarialWitness w = io::witness_from_json(io::read_json(witness_path));
  const WitnessCheck check = verify_witness(w, stored.estimate.theta_hat, p.spec);
  std::cout.precision(17);
  std::cout << "recomputed " << check.recomputed << " recorded " << w.value << " bound " << p.spec.s[w.ell] << "\n";
  if (!check.ok()) {
    std::cout << "witness rejected: " << check.diagnostic << "\n";
    return kFailed;
  }
  std::cout << "witness verified\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe exploration experiments for linear-Gaussian systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");

  auto* fig1 = app.add_subcommand("fig1", "Largest safe ball vs model error");
  auto* fig2 = app.add_subcommand("fig2", "Single vs multi-ball sample efficiency");
  auto* fig3 = app.add_subcommand("fig3", "Registry snapshots");

  auto* simulate = app.add_subcommand("simulate", "Write a problem and episodes from the nominal ball");
  std::optional<int> episodes;
  simulate->add_option("--episodes", episodes, "Number of episodes");

  auto* estimate = app.add_subcommand("estimate", "Fit a model to an episode log");
  std::string episodes_path;
  std::optional<double> sigma;
  estimate->add_option("--episodes", episodes_path, "Episode CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--sigma", sigma, "Known noise scale (default: estimated)");

  auto* maxball = app.add_subcommand("maxball", "Largest certified ball around u*");
  std::string estimate_path, problem_path;
  std::optional<double> epsilon;
  maxball->add_option("--estimate", estimate_path, "Estimate JSON")->required()->check(CLI::ExistingFile);
  maxball->add_option("--problem", problem_path, "Problem JSON (default: built from the config)");
  maxball->add_option("--epsilon", epsilon, "Override the estimate's epsilon");

  auto* verify = app.add_subcommand("verify", "Independently re-check a witness");
  std::string witness_path;
  verify->add_option("--witness", witness_path, "Witness JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--estimate", estimate_path, "Estimate JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--problem", problem_path, "Problem JSON (default: built from the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*fig1) return cmd_fig1(g);
    if (*fig2) return cmd_fig2(g);
    if (*fig3) return cmd_fig3(g);
    if (*simulate) return cmd_simulate(g, episodes);
    if (*estimate) return cmd_estimate(g, episodes_path, sigma);
    if (*maxball) return cmd_maxball(g, estimate_path, problem_path, epsilon);
    if (*verify) return cmd_verify(g, witness_path, estimate_path, problem_path);
  } catch (const NominalUnsafeError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  } catch (const StabilityError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return kAssumption;
  } catch (const OptimizerError& e) {
    std::cerr << "optimizer: " << e.what() << "\n";
    return kOptimizer;
  } catch (const BoundInapplicableError& e) {
    std::cerr << "optimizer: " << e.what() << "\n";
    return kOptimizer;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kFailed;
}
