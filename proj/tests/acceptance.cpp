// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance <path-to-safex-cli> <work-dir>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oracles.hpp"
#include "safex/experiments.hpp"

namespace fs = std::filesystem;
using namespace safex;

namespace {

std::string g_cli;
fs::path g_work;

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Every UNSAFE verdict met during the run, with what is needed to re-check it.
struct RecordedWitness {
  AdversarialWitness witness;
  Theta theta_hat;
  SafetySpec spec;
};
std::vector<RecordedWitness> g_witnesses;

void record(const std::optional<AdversarialWitness>& w, const Theta& th, const SafetySpec& spec) {
  if (w) g_witnesses.push_back({*w, th, spec});
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = g_cli + " " + args + " >" + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

/// Transitions from episodes of 20 steps at x0 = 0, actions uniform in [-1, 1]^d'.
TrainingData uniform_data(const LinearGaussianModel& m, Index n, Rng rng) {
  EpisodeLog log;
  const Index dp = m.action_dim();
  const Policy p = [dp](const Vector&, int, Rng& r) {
    Vector u(dp);
    for (Index i = 0; i < dp; ++i) u[i] = r.uniform(-1.0, 1.0);
    return u;
  };
  while (static_cast<Index>(log.triple_count()) < n) log.append(run_episode(m, Vector::Zero(m.state_dim()), p, 20, rng));
  TrainingData d = log.training_data();
  d.X.conservativeResize(n, Eigen::NoChange);
  d.Y.conservativeResize(n, Eigen::NoChange);
  return d;
}

std::optional<Theta> sample_stable(const Theta& hat, double eps, Rng& rng) {
  const Index d = hat.state_dim(), dp = hat.action_dim();
  const Index n = d * (d + dp);
  for (int k = 0; k < 1000; ++k) {
    Vector v = rng.unit_sphere(n) * eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    const Matrix D = Eigen::Map<const Matrix>(v.data(), d, d + dp);
    const Theta t = Theta::from_matrix(hat.matrix() + D, d);
    if (spectral_radius(t.A()) < 1.0) return t;
  }
  return std::nullopt;
}

/// Sampled maximum of w . (row_hat + p) over ||p|| <= eps, then a shrinking
/// compass search on the sphere around the best sample.
double one_step_oracle(const Vector& row_hat, const Vector& w, double eps, Rng& rng) {
  const Index n = w.size();
  Vector best_dir = rng.unit_sphere(n);
  double best = w.dot(best_dir);
  for (int i = 0; i < 100000; ++i) {
    const Vector dir = rng.unit_sphere(n);
    const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    const double v = w.dot(dir);
    best = std::max(best, v * radius);
    if (v > w.dot(best_dir)) best_dir = dir;
  }
  double step = 0.1;
  double cur = w.dot(best_dir);
  while (step > 1e-13) {
    bool improved = false;
    for (Index i = 0; i < n; ++i)
      for (double sgn : {1.0, -1.0}) {
        Vector cand = best_dir;
        cand[i] += sgn * step;
        cand.normalize();
        const double v = w.dot(cand);
        if (v > cur) {
          cur = v;
          best_dir = cand;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  return row_hat.dot(w) + eps * std::max(cur, best);
}

// ------------------------------------------------------------------ criteria

Outcome criterion1() {
  Rng rng(101);
  double worst_gap = 0.0, worst_attain = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Index d = 1 + rng.index(3), dp = 1 + rng.index(2);
    const double eps = i % 2 == 0 ? 0.01 : 0.1;
    const Theta th(rng.normal_matrix(d, d), rng.normal_matrix(d, dp));
    const Vector x0 = rng.normal_vector(d), u = rng.normal_vector(dp);
    const Index ell = rng.index(static_cast<std::size_t>(d));
    const OneStepWorstCase wc = one_step_worst_case(th, eps, x0, u, ell);
    Vector w(d + dp);
    w << x0, u;
    const Vector row_hat = th.row(ell).transpose();
    const double oracle_v = one_step_oracle(row_hat, w, eps, rng);
    worst_gap = std::max(worst_gap, std::abs(oracle_v - wc.value));
    if (oracle_v > wc.value + 1e-12) return {false, "oracle exceeds closed form on instance " + std::to_string(i)};
    const Vector attained_row = row_hat + wc.perturbation.transpose();
    if (wc.perturbation.norm() > eps * (1.0 + 1e-12))
      return {false, "maximizer leaves the eps-ball on instance " + std::to_string(i)};
    worst_attain = std::max(worst_attain, std::abs(attained_row.dot(w) - wc.value));
  }
  const bool ok = worst_gap <= 1e-3 && worst_attain <= 1e-10;
  return {ok, "max |oracle - closed| = " + fmt("%.3g", worst_gap) + ", max attainment error = " +
                  fmt("%.3g", worst_attain)};
}

Outcome criterion2() {
  const auto m = random_stable_model(5, 2, 0.9, 1, 0.01);
  int covered = 0;
  const Rng root(202);
  for (int run = 0; run < 100; ++run) {
    const ModelEstimate est = estimate_model(uniform_data(m, 2000, root.split(run)));
    covered += frobenius_distance(est.theta_hat, m.theta()) < epsilon_bound(est, 0.05, 0.01).epsilon;
  }
  return {covered >= 95, std::to_string(covered) + "/100 runs covered"};
}

Outcome criterion3() {
  const auto m = random_stable_model(5, 2, 0.9, 1, 0.0);
  const ModelEstimate est = estimate_model(uniform_data(m, 500, Rng(303)));
  const double err = frobenius_distance(est.theta_hat, m.theta());
  return {err <= 1e-8, "eps_actual = " + fmt("%.3g", err)};
}

Outcome criterion4() {
  const Matrix a = Matrix::Constant(1, 1, 0.5);
  const double ss = steady_state_variance(a, 1.0, 0);
  const LinearGaussianModel m(a, Matrix::Constant(1, 1, 1.0), 1.0);
  Rng rng(404);
  constexpr int N = 1000000;
  double s = 0.0, s2 = 0.0;
  const Vector u = Vector::Zero(1);
  for (int i = 0; i < N; ++i) {
    Vector x = Vector::Zero(1);
    for (int t = 0; t < 3; ++t) x = step(m, x, u, rng);
    s += x[0];
    s2 += x[0] * x[0];
  }
  const double var = s2 / N - (s / N) * (s / N);
  const double rel = std::abs(var / 1.3125 - 1.0);
  const double closed = state_variance(a, 1.0, 3, 0);
  const bool ok = std::abs(ss - 4.0 / 3.0) <= 1e-6 && rel <= 0.01 && std::abs(closed - 1.3125) <= 1e-12;
  return {ok, "steady state " + fmt("%.10f", ss) + ", tau=3 Monte-Carlo " + fmt("%.5f", var) + " (rel " +
                  fmt("%.2g", rel) + ")"};
}

Outcome criterion5() {
  Rng rng(505);
  int violations = 0;
  long checked = 0;

  for (int inst = 0; inst < 20; ++inst) {
    const auto m = random_stable_model(3, 2, 0.8, 500 + inst);
    const Vector u = rng.normal_vector(2);
    const Index ell = rng.index(3);
    const double eps = 0.02;
    const double bound = fixed_action_upper_bound(m.theta(), eps, u, ell);
    for (int s = 0; s < 10000; ++s) {
      const auto t = sample_stable(m.theta(), eps, rng);
      if (!t) continue;
      ++checked;
      if (steady_state_expectation(t->A(), t->B(), u)[ell] > bound + 1e-12) ++violations;
    }
  }
  const int fixed_viol = violations;

  for (int inst = 0; inst < 5; ++inst) {
    const Matrix A_hat = random_stable_model(3, 1, 0.9, 600 + inst).A;
    const double eps = 0.05;
    for (int s = 0; s < 1000; ++s) {
      Vector v = rng.unit_sphere(9) * eps * rng.uniform();
      const Matrix A = A_hat + Eigen::Map<const Matrix>(v.data(), 3, 3);
      for (int t = 1; t <= 10; ++t) {
        ++checked;
        if ((oracle::power(A, t - 1) - oracle::power(A_hat, t - 1)).norm() >
            matrix_power_perturbation_bound(A_hat, eps, t) + 1e-12)
          ++violations;
      }
    }
  }
  const int power_viol = violations - fixed_viol;

  SafeBallConfig cfg;
  for (int inst = 0; inst < 10; ++inst) {
    const auto m = random_stable_model(3, 2, 0.85, 700 + inst);
    const Vector u = rng.normal_vector(2), x0 = rng.normal_vector(3);
    const double eps = 0.01 + 0.01 * inst, delta = 0.1 + 0.1 * inst;
    const Index ell = rng.index(3);
    const int tau = 1 + static_cast<int>(rng.index(10));
    const AdversaryResult adv = adversarial_value(u, delta, m.theta(), eps, x0, ell, tau, cfg, rng.split(inst));
    ++checked;
    if (adv.value > trajectory_ball_loose_bound(m.theta(), eps, delta, u, x0, ell, tau) + 1e-10) ++violations;
  }
  const int loose_viol = violations - fixed_viol - power_viol;
  return {violations == 0, std::to_string(checked) + " comparisons; violations fixed/power/loose = " +
                               std::to_string(fixed_viol) + "/" + std::to_string(power_viol) + "/" +
                               std::to_string(loose_viol)};
}

/// Battery of ball checks on generated problems; feeds criterion 6.
void witness_battery() {
  Rng rng(606);
  for (int i = 0; i < 30; ++i) {
    ExperimentConfig cfg;
    cfg.model_seed = 1000 + i;
    cfg.T = 10;
    cfg.high_probability = i % 3 == 0;
    const Problem p = build_problem(cfg);
    const Theta th = p.model.theta();
    const double eps = rng.uniform(0.0, 0.02) * th.norm();
    const double delta = rng.uniform(0.1, 3.0);
    const SafeBallConfig bc = ball_config(cfg, p.model.sigma);
    const auto r = safe_ball_check(p.u_star, delta, th, eps, p.x0, cfg.T, p.spec, bc, rng.split(i));
    record(r.witness, th, p.spec);
    std::vector<Vector> seq;
    for (int t = 0; t < cfg.T; ++t) seq.push_back(rng.in_ball(p.u_star, delta));
    record(sequence_safe(th, eps, p.x0, seq, p.spec, bc, rng.split(100 + i)).witness, th, p.spec);
  }
}

Outcome criterion9() {
  const double omega = 0.05;
  double worst_bracket = 0.0, worst_shift = 0.0;
  for (int i = 0; i < 10; ++i) {
    ExperimentConfig cfg;
    cfg.model_seed = 900 + i;
    const Problem p = build_problem(cfg);
    const Theta th = p.model.theta();
    const double eps = 0.005 * th.norm();
    const SafeBallConfig bc = ball_config(cfg, p.model.sigma);
    const Rng rng(909 + i);
    const auto r1 = max_safe_ball(th, eps, cfg.T, p.u_star, cfg.delta0, omega, p.x0, p.spec, bc, rng);
    const auto r2 = max_safe_ball(th, eps, cfg.T, p.u_star, cfg.delta0, omega / 2, p.x0, p.spec, bc, rng);
    record(r1.witness, th, p.spec);
    record(r2.witness, th, p.spec);
    worst_bracket = std::max(worst_bracket, r1.upper - r1.radius);
    worst_shift = std::max(worst_shift, std::abs(r1.radius - r2.radius));
    const auto at_l = safe_ball_check(p.u_star, r1.radius, th, eps, p.x0, cfg.T, p.spec, bc, rng);
    record(at_l.witness, th, p.spec);
    if (!at_l.safe) return {false, "check at l fails on instance " + std::to_string(i)};
    if (r1.upper - r1.radius > omega + 1e-12) return {false, "h - l > omega on instance " + std::to_string(i)};
    if (std::abs(r1.radius - r2.radius) > omega)
      return {false, "halving omega moved l by " + fmt("%.4f", std::abs(r1.radius - r2.radius))};
  }
  return {true, "max h - l = " + fmt("%.4f", worst_bracket) + ", max shift under omega/2 = " + fmt("%.4f", worst_shift)};
}

Outcome criterion6() {
  witness_battery();
  int bad = 0;
  std::string first;
  for (const auto& r : g_witnesses) {
    const WitnessCheck c = verify_witness(r.witness, r.theta_hat, r.spec, 1e-8);
    if (!c.ok()) {
      ++bad;
      if (first.empty()) first = c.diagnostic;
    }
  }
  const bool ok = bad == 0 && !g_witnesses.empty();
  return {ok, std::to_string(g_witnesses.size() - bad) + "/" + std::to_string(g_witnesses.size()) +
                  " witnesses verified" + (first.empty() ? "" : " (" + first + ")")};
}

Outcome criterion10() {
  Rng rng(1010);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Index d = 2 + rng.index(3), dp = 1 + rng.index(2);
    const Matrix A = random_stable_model(d, dp, rng.uniform(0.3, 0.95), 1100 + i).A;
    const Matrix B = rng.normal_matrix(d, dp);
    const Vector x0 = rng.normal_vector(d);
    const int tau = 1 + static_cast<int>(rng.index(12));
    std::vector<Vector> z;
    for (int t = 0; t < tau; ++t) z.push_back(rng.normal_vector(dp));
    const double c = i < 10 ? 0.0 : rng.uniform(0.5, 3.0);
    const double sigma = rng.uniform(0.05, 1.0);
    const Index ell = rng.index(static_cast<std::size_t>(d));
    const Matrix G = ball_objective_gradient_A(A, B, z, x0, ell, c, sigma);
    const double h = 1e-6;
    for (Index r = 0; r < d; ++r)
      for (Index k = 0; k < d; ++k) {
        Matrix Ap = A, Am = A;
        Ap(r, k) += h;
        Am(r, k) -= h;
        const double fd =
            (ball_objective(Ap, B, z, x0, ell, c, sigma) - ball_objective(Am, B, z, x0, ell, c, sigma)) / (2.0 * h);
        worst = std::max(worst, std::abs(G(r, k) - fd) / std::max(1.0, std::abs(fd)));
      }
  }
  return {worst <= 1e-5, "max relative error = " + fmt("%.3g", worst) + " (10 points with c > 0)"};
}

// CLI-driven figures: each runs twice with the same seed; criterion 11 compares bytes.
struct FigRuns {
  int status[2] = {-1, -1};
  double seconds = 0.0;
  fs::path dir[2];
};
std::map<std::string, FigRuns> g_figs;

FigRuns& run_figure(const std::string& name, std::uint64_t seed) {
  FigRuns& f = g_figs[name];
  for (int k = 0; k < 2; ++k) {
    f.dir[k] = g_work / (name + "_run" + std::to_string(k));
    fs::remove_all(f.dir[k]);
    fs::create_directories(f.dir[k]);
    const auto t0 = std::chrono::steady_clock::now();
    f.status[k] = cli(name + " --seed " + std::to_string(seed) + " --out " + f.dir[k].string(), f.dir[k] / "log.txt");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (k == 0) f.seconds = secs;
  }
  return f;
}

Outcome criterion7() {
  FigRuns& f = run_figure("fig1", 7);
  if (f.status[0] != 0) return {false, "fig1 exited with " + std::to_string(f.status[0])};
  const auto rows = read_csv(f.dir[0] / "fig1.csv");
  const Problem p = problem_from_json(io::read_json((f.dir[0] / "problem.json").string()));
  const double target = 0.02 * p.model.theta().norm();
  double prev = 1e300, at_zero = -1.0, at_two = -1.0, closest = 1e300, max_rise = 0.0;
  bool monotone = true;
  for (const auto& r : rows) {
    const double eps = std::stod(r[0]), delta = std::stod(r[1]);
    if (eps == 0.0) at_zero = delta;
    if (std::abs(eps - target) < closest) {
      closest = std::abs(eps - target);
      at_two = delta;
    }
    if (delta > prev) max_rise = std::max(max_rise, delta - prev);
    if (delta > prev + 0.05) monotone = false;
    prev = std::min(prev, delta);
  }
  const double drop = at_zero - at_two;
  const bool ok = monotone && drop >= 0.1 && closest <= 1e-9 * target + 1e-15 && f.seconds < 600;
  return {ok, "delta_max(0) = " + fmt("%.4f", at_zero) + ", delta_max(2%) = " + fmt("%.4f", at_two) +
                  ", drop " + fmt("%.4f", drop) + ", largest rise " + fmt("%.4f", max_rise) + ", " +
                  fmt("%.1f s", f.seconds)};
}

Outcome criterion8() {
  FigRuns& f = run_figure("fig2", 8);
  if (f.status[0] != 0) return {false, "fig2 exited with " + std::to_string(f.status[0])};
  const auto med = read_csv(f.dir[0] / "fig2.csv");
  std::map<std::string, std::vector<std::pair<long, double>>> eps_t;
  std::map<std::string, double> final_actual;
  for (const auto& r : med) {
    eps_t[r[0]].push_back({std::stol(r[1]), std::stod(r[2])});
    if (std::stol(r[1]) == 20000) final_actual[r[0]] = std::stod(r[3]);
  }
  if (!final_actual.count("single") || !final_actual.count("multi")) return {false, "no rows at n = 20000"};
  bool decreasing = true;
  for (auto& [mode, v] : eps_t) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) decreasing = decreasing && v[i].second < v[i - 1].second;
  }
  // per-seed runs as well
  std::map<std::string, std::vector<double>> per_run;
  std::set<std::string> seeds;
  for (const auto& r : read_csv(f.dir[0] / "fig2_runs.csv")) {
    const std::string key = r[0] + "/" + r[1];
    seeds.insert(r[0]);
    auto& v = per_run[key];
    if (!v.empty()) decreasing = decreasing && std::stod(r[3]) < v.back();
    v.push_back(std::stod(r[3]));
  }
  const bool ok = seeds.size() >= 11 && final_actual["multi"] <= final_actual["single"] && decreasing &&
                  f.seconds < 1800;
  return {ok, std::to_string(seeds.size()) + " paired seeds; median eps_actual at n=20000 multi " +
                  fmt("%.5f", final_actual["multi"]) + " vs single " + fmt("%.5f", final_actual["single"]) +
                  "; eps_theoretical strictly decreasing: " + (decreasing ? "yes" : "no") + "; " +
                  fmt("%.1f s", f.seconds)};
}

Outcome criterion11() {
  if (!g_figs.count("fig3")) run_figure("fig3", 11);
  std::string detail;
  bool ok = true;
  const std::vector<std::pair<std::string, std::vector<std::string>>> files = {
      {"fig1", {"fig1.csv"}}, {"fig2", {"fig2.csv", "fig2_runs.csv"}}, {"fig3", {"fig3.csv"}}};
  for (const auto& [fig, names] : files) {
    const FigRuns& f = g_figs[fig];
    if (f.status[0] != 0 || f.status[1] != 0) {
      ok = false;
      detail += fig + " failed to run; ";
      continue;
    }
    for (const auto& n : names) {
      const std::string a = slurp(f.dir[0] / n), b = slurp(f.dir[1] / n);
      const bool same = !a.empty() && a == b;
      ok = ok && same;
      detail += n + (same ? " identical" : " DIFFERS") + "; ";
    }
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <safex-cli> <work-dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = argv[2];
  fs::create_directories(g_work);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},   {9, criterion9},
      {6, criterion6}, {10, criterion10}, {7, criterion7}, {8, criterion8}, {11, criterion11}};
  std::map<int, Outcome> results;
  for (const auto& [id, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail += fmt(" [%.1f s]", secs);
    results[id] = o;
    std::cerr << "criterion " << id << " done" << fmt(" in %.1f s", secs) << "\n";
  }
  bool all = true;
  for (const auto& [id, o] : results) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << "\n";
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
