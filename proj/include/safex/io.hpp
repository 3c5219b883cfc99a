#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safex/ball_optimizer.hpp"
#include "safex/estimator.hpp"
#include "safex/exploration.hpp"
#include "safex/model.hpp"
#include "safex/safety_bounds.hpp"
#include "safex/simulator.hpp"

namespace safex::io {

using json = nlohmann::json;

/// Shortest round-trippable text for a double, stable across runs.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- matrices

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

/// Row-major nested arrays.
inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline Vector vector_from_json(const json& j) {
  detail::require(j.is_array(), "expected a JSON array for a vector");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

/// Accepts nested rows, or a flat row-major array when `rows`/`cols` are given.
inline Matrix matrix_from_json(const json& j, Index rows = -1, Index cols = -1) {
  detail::require(j.is_array(), "expected a JSON array for a matrix");
  if (!j.empty() && j.front().is_array()) {
    const Index r = static_cast<Index>(j.size());
    const Index c = static_cast<Index>(j.front().size());
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
      detail::require(static_cast<Index>(j[i].size()) == c, "ragged matrix rows");
      for (Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
    }
    detail::require((rows < 0 || r == rows) && (cols < 0 || c == cols), "matrix has unexpected shape");
    return m;
  }
  detail::require(rows >= 0 && cols >= 0, "flat matrix arrays need known dimensions");
  detail::require(static_cast<Index>(j.size()) == rows * cols, "flat matrix array has the wrong length");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = j[i * cols + k].get<double>();
  return m;
}

// ------------------------------------------------------------------ model

inline json to_json(const LinearGaussianModel& m) {
  return json{{"d", m.state_dim()}, {"d_prime", m.action_dim()}, {"A", to_json(m.A)}, {"B", to_json(m.B)},
              {"sigma", m.sigma}};
}

inline LinearGaussianModel model_from_json(const json& j) {
  try {
    const Index d = j.at("d").get<Index>();
    const Index dp = j.at("d_prime").get<Index>();
    return LinearGaussianModel(matrix_from_json(j.at("A"), d, d), matrix_from_json(j.at("B"), d, dp),
                               j.at("sigma").get<double>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad model JSON: ") + e.what());
  }
}

inline json to_json(const SafetySpec& spec) {
  json s = json::array();
  for (Index i = 0; i < spec.s.size(); ++i) s.push_back(spec.s[i]);
  return json{{"s", s}, {"constrained", spec.constrained}};
}

inline SafetySpec spec_from_json(const json& j) {
  try {
    return SafetySpec(vector_from_json(j.at("s")), j.at("constrained").get<std::vector<Index>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad safety spec JSON: ") + e.what());
  }
}

inline json to_json(const ModelEstimate& est, const ErrorBound& bound) {
  return json{{"theta_hat", to_json(est.theta_hat.matrix())},
              {"sigma_hat", est.sigma_hat},
              {"Q_hat", to_json(est.Q_hat)},
              {"n", est.n},
              {"lambda_min", est.lambda_min},
              {"epsilon", bound.epsilon},
              {"alpha", bound.alpha}};
}

struct StoredEstimate {
  ModelEstimate estimate;
  ErrorBound bound;
};

inline StoredEstimate estimate_from_json(const json& j) {
  try {
    StoredEstimate out;
    const Matrix theta = matrix_from_json(j.at("theta_hat"));
    out.estimate.theta_hat = Theta::from_matrix(theta, theta.rows());
    out.estimate.sigma_hat = j.at("sigma_hat").get<double>();
    out.estimate.Q_hat = matrix_from_json(j.at("Q_hat"), theta.cols(), theta.cols());
    out.estimate.n = j.at("n").get<Index>();
    out.estimate.lambda_min = j.at("lambda_min").get<double>();
    out.bound = ErrorBound{j.at("epsilon").get<double>(), j.at("alpha").get<double>(), out.estimate.n};
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad estimate JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------- witness

inline json to_json(const AdversarialWitness& w) {
  json z = json::array();
  for (const auto& zt : w.z) z.push_back(to_json(zt));
  return json{{"A", to_json(w.A)},           {"B", to_json(w.B)},         {"z", z},
              {"ell", w.ell},                {"tau", w.tau},              {"value", w.value},
              {"x0", to_json(w.x0)},         {"center", to_json(w.center)}, {"delta", w.delta},
              {"epsilon", w.epsilon},        {"c", w.c},                  {"sigma", w.sigma}};
}

inline AdversarialWitness witness_from_json(const json& j) {
  try {
    AdversarialWitness w;
    w.A = matrix_from_json(j.at("A"));
    w.B = matrix_from_json(j.at("B"));
    for (const auto& zt : j.at("z")) w.z.push_back(vector_from_json(zt));
    w.ell = j.at("ell").get<Index>();
    w.tau = j.at("tau").get<int>();
    w.value = j.at("value").get<double>();
    w.x0 = vector_from_json(j.at("x0"));
    w.center = vector_from_json(j.value("center", json::array()));
    w.delta = j.value("delta", 0.0);
    w.epsilon = j.at("epsilon").get<double>();
    w.c = j.value("c", 0.0);
    w.sigma = j.value("sigma", 0.0);
    return w;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad witness JSON: ") + e.what());
  }
}

inline json to_json(const SafetyVerdict& v) {
  json values = json::array();
  for (std::size_t i = 0; i < v.constrained.size(); ++i)
    values.push_back(json{{"ell", v.constrained[i]}, {"value", v.worst_values[i]}});
  return json{{"safe", v.safe},
              {"worst_values", values},
              {"binding_index", v.binding_index ? json(*v.binding_index) : json(nullptr)}};
}

inline json to_json(const std::vector<ActionBall>& balls) {
  json out = json::array();
  for (const auto& b : balls) out.push_back(json{{"center", to_json(b.center)}, {"radius", b.radius}});
  return out;
}

// ------------------------------------------------------------------ files

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse " + path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// -------------------------------------------------------------------- CSV

/// episode,t,x_0..x_{d-1},u_0..u_{d'-1}; the final state of each episode has
/// empty action fields.
inline std::string episodes_csv(const EpisodeLog& log) {
  std::ostringstream out;
  if (log.trajectories().empty()) return "episode,t\n";
  const auto& first = log.trajectories().front();
  const Index d = first.states.front().size();
  const Index dp = first.actions.empty() ? 0 : first.actions.front().size();
  out << "episode,t";
  for (Index i = 0; i < d; ++i) out << ",x_" << i;
  for (Index i = 0; i < dp; ++i) out << ",u_" << i;
  out << "\n";
  for (std::size_t e = 0; e < log.trajectories().size(); ++e) {
    const auto& traj = log.trajectories()[e];
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      out << e << "," << t;
      for (Index i = 0; i < d; ++i) out << "," << fmt(traj.states[t][i]);
      for (Index i = 0; i < dp; ++i) out << "," << (t < traj.actions.size() ? fmt(traj.actions[t][i]) : "");
      out << "\n";
    }
  }
  return out.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

inline EpisodeLog episodes_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("episode CSV is empty");
  const auto header = detail::split_csv_line(line);
  Index d = 0, dp = 0;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) ++d;
    if (h.rfind("u_", 0) == 0) ++dp;
  }
  safex::detail::require(header.size() == static_cast<std::size_t>(2 + d + dp) && d > 0 && dp > 0,
                         "episode CSV header must be episode,t,x_*,u_*");
  EpisodeLog log;
  Trajectory cur;
  long current_episode = -1;
  auto flush = [&] {
    if (!cur.states.empty()) log.append(std::move(cur));
    cur = Trajectory{};
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    safex::detail::require(cells.size() == header.size(), "episode CSV row has the wrong number of fields");
    const long episode = std::stol(cells[0]);
    if (episode != current_episode) {
      flush();
      current_episode = episode;
    }
    Vector x(d);
    for (Index i = 0; i < d; ++i) x[i] = std::stod(cells[2 + i]);
    cur.states.push_back(std::move(x));
    if (!cells[2 + d].empty()) {
      Vector u(dp);
      for (Index i = 0; i < dp; ++i) u[i] = std::stod(cells[2 + d + i]);
      cur.actions.push_back(std::move(u));
    }
  }
  flush();
  return log;
}

// -------------------------------------------------------------------- SVG

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Minimal line chart: axes, tick labels, one polyline per series, legend.
inline std::string line_chart_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                  const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 20, Tm = 40, Bm = 55;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
  ymin = std::min(ymin, 0.0);
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - Bm - (y - ymin) / (ymax - ymin) * (H - Tm - Bm); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - Bm << "\" x2=\"" << W - R << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 5.0;
    const double yv = ymin + (ymax - ymin) * k / 5.0;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.4g", xv);
    std::snprintf(by, sizeof by, "%.4g", yv);
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - Bm + 16 << "\" text-anchor=\"middle\">" << bx << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << by << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  o << "<text x=\"16\" y=\"" << (Tm + H - Bm) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (Tm + H - Bm) / 2 << ")\">" << ylabel << "</text>\n";
  double ly = Tm + 8;
  for (const auto& s : series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << "," << py(s.y[i]);
    o << "\"/>\n";
    o << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 125 << "\" y2=\"" << ly
      << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    o << "<text x=\"" << W - R - 120 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

struct CirclePanel {
  std::string title;
  std::vector<ActionBall> balls;
};

/// Grid of panels, each drawing balls as circles in the plane of the first two
/// action coordinates. All panels share one coordinate frame.
inline std::string circle_panels_svg(const std::vector<CirclePanel>& panels, int columns) {
  constexpr double P = 260, Pad = 30;
  const int cols = std::max(1, columns);
  const int rows = static_cast<int>((panels.size() + cols - 1) / cols);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : panels)
    for (const auto& b : p.balls) {
      const double cx = b.center[0], cy = b.center.size() > 1 ? b.center[1] : 0.0;
      xmin = std::min(xmin, cx - b.radius);
      xmax = std::max(xmax, cx + b.radius);
      ymin = std::min(ymin, cy - b.radius);
      ymax = std::max(ymax, cy + b.radius);
    }
  if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
  if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
  const double span = std::max(xmax - xmin, ymax - ymin) * 1.1;
  const double cxm = 0.5 * (xmin + xmax), cym = 0.5 * (ymin + ymax);
  const double scale = (P - 2 * Pad) / span;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * P << "\" height=\"" << rows * P
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const double ox = (k % cols) * P, oy = (k / cols) * P;
    o << "<rect x=\"" << ox + Pad / 2 << "\" y=\"" << oy + Pad / 2 << "\" width=\"" << P - Pad << "\" height=\""
      << P - Pad << "\" fill=\"none\" stroke=\"#999\"/>\n";
    o << "<text x=\"" << ox + P / 2 << "\" y=\"" << oy + 12 << "\" text-anchor=\"middle\">" << panels[k].title
      << "</text>\n";
    for (std::size_t i = 0; i < panels[k].balls.size(); ++i) {
      const auto& b = panels[k].balls[i];
      const double cx = b.center[0], cy = b.center.size() > 1 ? b.center[1] : 0.0;
      const double sx = ox + P / 2 + (cx - cxm) * scale;
      const double sy = oy + P / 2 - (cy - cym) * scale;
      o << "<circle cx=\"" << sx << "\" cy=\"" << sy << "\" r=\"" << std::max(1.0, b.radius * scale)
        << "\" fill=\"" << (i == 0 ? "#1f77b4" : "#ff7f0e") << "\" fill-opacity=\"0.25\" stroke=\""
        << (i == 0 ? "#1f77b4" : "#ff7f0e") << "\"/>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace safex::io
