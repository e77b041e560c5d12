#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tvopt/scenario.hpp"
#include "tvopt/sim.hpp"

namespace tvopt {

/// Locale-independent shortest round-trip formatting; keeps emitted files
/// byte-identical across reruns.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Display form for reports, six significant digits.
inline std::string fmt_short(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> csv_header(const TrajectoryLog& log) {
  std::vector<std::string> cols;
  cols.push_back("t");
  for (int i = 1; i <= log.n; ++i) {
    for (int k = 1; k <= log.m; ++k)
      cols.push_back("x" + std::to_string(i) + "_" + std::to_string(k));
    if (log.has_velocity)
      for (int k = 1; k <= log.m; ++k)
        cols.push_back("v" + std::to_string(i) + "_" + std::to_string(k));
    for (int k = 1; k <= log.m; ++k)
      cols.push_back("u" + std::to_string(i) + "_" + std::to_string(k));
  }
  for (int k = 1; k <= log.m; ++k) cols.push_back("xstar_" + std::to_string(k));
  for (const std::string& name : metric_names()) cols.push_back(name);
  return cols;
}

inline std::string csv_string(const TrajectoryLog& log) {
  std::string out;
  const std::vector<std::string> cols = csv_header(log);
  for (size_t c = 0; c < cols.size(); ++c) {
    if (c) out += ',';
    out += cols[c];
  }
  out += '\n';
  for (size_t s = 0; s < log.samples(); ++s) {
    out += fmt_double(log.times[s]);
    for (int i = 0; i < log.n; ++i) {
      for (int k = 0; k < log.m; ++k) out += ',' + fmt_double(log.x[s](i, k));
      if (log.has_velocity)
        for (int k = 0; k < log.m; ++k) out += ',' + fmt_double(log.v[s](i, k));
      for (int k = 0; k < log.m; ++k) out += ',' + fmt_double(log.u[s](i, k));
    }
    for (int k = 0; k < log.m; ++k) out += ',' + fmt_double(log.xstar[s](k));
    for (double v : metric_values(log.metrics[s])) out += ',' + fmt_double(v);
    out += '\n';
  }
  return out;
}

inline void write_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << csv_string(log);
}

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline CsvData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvData data;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) data.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != data.header.size())
      throw std::runtime_error("ragged csv row in " + path);
    data.rows.push_back(std::move(row));
  }
  return data;
}

// ---------------------------------------------------------------------------
// SVG emission

namespace plot_detail {

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
      "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};
  return colors;
}

struct Series {
  std::string label;
  std::string color;
  bool dashed = false;
  std::vector<double> xs, ys;
};

struct Panel {
  std::string title;
  std::string x_label, y_label;
  bool log_y = false;
  std::vector<Series> series;
};

inline std::string polyline(const Series& s, double x0, double x1, double y0, double y1,
                            double xlo, double xhi, double ylo, double yhi) {
  std::string pts;
  const double xspan = (xhi - xlo) == 0.0 ? 1.0 : (xhi - xlo);
  const double yspan = (yhi - ylo) == 0.0 ? 1.0 : (yhi - ylo);
  for (size_t k = 0; k < s.xs.size(); ++k) {
    const double px = x0 + (s.xs[k] - xlo) / xspan * (x1 - x0);
    const double py = y1 - (s.ys[k] - ylo) / yspan * (y1 - y0);
    pts += fmt_double(std::round(px * 100.0) / 100.0) + ',' +
           fmt_double(std::round(py * 100.0) / 100.0) + ' ';
  }
  std::string attr = "fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.2\"";
  if (s.dashed) attr += " stroke-dasharray=\"6 4\"";
  return "<polyline " + attr + " points=\"" + pts + "\"/>\n";
}

inline std::string render_panel(const Panel& panel, double ox, double oy, double w,
                                double h) {
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const Series& s : panel.series) {
    for (double v : s.xs) {
      xlo = std::min(xlo, v);
      xhi = std::max(xhi, v);
    }
    for (double v : s.ys) {
      const double y = panel.log_y ? std::log10(std::max(v, 1e-16)) : v;
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  if (xlo > xhi) {
    xlo = 0;
    xhi = 1;
  }
  if (ylo > yhi) {
    ylo = 0;
    yhi = 1;
  }
  const double pad_x = (xhi - xlo) * 0.05 + 1e-12;
  const double pad_y = (yhi - ylo) * 0.05 + 1e-12;
  xlo -= pad_x;
  xhi += pad_x;
  ylo -= pad_y;
  yhi += pad_y;

  std::string svg;
  svg += "<rect x=\"" + fmt_double(ox) + "\" y=\"" + fmt_double(oy) + "\" width=\"" +
         fmt_double(w) + "\" height=\"" + fmt_double(h) +
         "\" fill=\"white\" stroke=\"#333\"/>\n";
  svg += "<text x=\"" + fmt_double(ox + w / 2) + "\" y=\"" + fmt_double(oy - 10) +
         "\" text-anchor=\"middle\" font-size=\"14\">" + panel.title + "</text>\n";

  for (int tick = 0; tick <= 4; ++tick) {
    const double fx = xlo + (xhi - xlo) * tick / 4.0;
    const double px = ox + w * tick / 4.0;
    svg += "<line x1=\"" + fmt_double(px) + "\" y1=\"" + fmt_double(oy + h) + "\" x2=\"" +
           fmt_double(px) + "\" y2=\"" + fmt_double(oy + h + 4) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + fmt_double(px) + "\" y=\"" + fmt_double(oy + h + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" +
           fmt_double(std::round(fx * 100.0) / 100.0) + "</text>\n";
    const double fy = ylo + (yhi - ylo) * tick / 4.0;
    const double py = oy + h - h * tick / 4.0;
    std::string label = panel.log_y ? ("1e" + fmt_double(std::round(fy * 10.0) / 10.0))
                                    : fmt_double(std::round(fy * 100.0) / 100.0);
    svg += "<text x=\"" + fmt_double(ox - 6) + "\" y=\"" + fmt_double(py + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + label + "</text>\n";
  }

  double ly = oy + 14;
  for (const Series& s : panel.series) {
    Series mapped = s;
    if (panel.log_y)
      for (double& v : mapped.ys) v = std::log10(std::max(v, 1e-16));
    svg += polyline(mapped, ox, ox + w, oy, oy + h, xlo, xhi, ylo, yhi);
    if (!s.label.empty()) {
      svg += "<rect x=\"" + fmt_double(ox + w - 150) + "\" y=\"" + fmt_double(ly - 8) +
             "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
      svg += "<text x=\"" + fmt_double(ox + w - 136) + "\" y=\"" + fmt_double(ly + 1) +
             "\" font-size=\"10\">" + s.label + "</text>\n";
      ly += 14;
    }
  }
  return svg;
}

}  // namespace plot_detail

/// Two panels: planar trajectories (agents solid, optimal trajectory dashed)
/// and log-scale metric curves.
inline std::string svg_string(const std::string& title, const std::vector<double>& times,
                              const std::vector<std::vector<double>>& agent_x,
                              const std::vector<std::vector<double>>& agent_y,
                              const std::vector<double>& xstar_x,
                              const std::vector<double>& xstar_y,
                              const std::vector<std::pair<std::string, std::vector<double>>>&
                                  metric_series) {
  plot_detail::Panel traj;
  traj.title = title + ": trajectories";
  for (size_t i = 0; i < agent_x.size(); ++i) {
    plot_detail::Series s;
    s.label = "agent " + std::to_string(i + 1);
    s.color = plot_detail::palette()[i % plot_detail::palette().size()];
    s.xs = agent_x[i];
    s.ys = agent_y[i];
    traj.series.push_back(std::move(s));
  }
  if (!xstar_x.empty()) {
    plot_detail::Series s;
    s.label = "optimal";
    s.color = "#000000";
    s.dashed = true;
    s.xs = xstar_x;
    s.ys = xstar_y;
    traj.series.push_back(std::move(s));
  }

  plot_detail::Panel met;
  met.title = title + ": metrics (log scale)";
  met.log_y = true;
  for (size_t k = 0; k < metric_series.size(); ++k) {
    plot_detail::Series s;
    s.label = metric_series[k].first;
    s.color = plot_detail::palette()[k % plot_detail::palette().size()];
    s.xs = times;
    s.ys = metric_series[k].second;
    met.series.push_back(std::move(s));
  }

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1160\" height=\"560\" "
      "viewBox=\"0 0 1160 560\">\n<rect width=\"1160\" height=\"560\" fill=\"white\"/>\n";
  svg += plot_detail::render_panel(traj, 50, 40, 490, 470);
  svg += plot_detail::render_panel(met, 630, 40, 490, 470);
  svg += "</svg>\n";
  return svg;
}

inline std::string svg_from_log(const ScenarioConfig& cfg, const TrajectoryLog& log) {
  std::vector<std::vector<double>> ax(static_cast<size_t>(log.n)),
      ay(static_cast<size_t>(log.n));
  std::vector<double> sx, sy;
  for (size_t s = 0; s < log.samples(); ++s) {
    for (int i = 0; i < log.n; ++i) {
      ax[static_cast<size_t>(i)].push_back(log.x[s](i, 0));
      ay[static_cast<size_t>(i)].push_back(log.m > 1 ? log.x[s](i, 1) : log.times[s]);
    }
    sx.push_back(log.xstar[s](0));
    sy.push_back(log.m > 1 ? log.xstar[s](1) : log.times[s]);
  }
  std::vector<std::pair<std::string, std::vector<double>>> series;
  const std::vector<std::string> wanted = {"ex_norm", "track_max", "grad_sum"};
  for (const std::string& name : wanted) {
    std::vector<double> vals;
    for (const Metrics& m : log.metrics) {
      const std::vector<double> all = metric_values(m);
      for (size_t k = 0; k < metric_names().size(); ++k)
        if (metric_names()[k] == name) vals.push_back(all[k]);
    }
    series.emplace_back(name, std::move(vals));
  }
  return svg_string(cfg.name, log.times, ax, ay, sx, sy, series);
}

inline std::string svg_from_csv(const CsvData& data, const std::string& title) {
  const int tc = data.column("t");
  if (tc < 0) throw std::runtime_error("csv has no t column");
  std::vector<double> times;
  for (const auto& row : data.rows) times.push_back(row[static_cast<size_t>(tc)]);
  std::vector<std::vector<double>> ax, ay;
  for (int i = 1;; ++i) {
    const int cx = data.column("x" + std::to_string(i) + "_1");
    if (cx < 0) break;
    const int cy = data.column("x" + std::to_string(i) + "_2");
    std::vector<double> xs, ys;
    for (const auto& row : data.rows) {
      xs.push_back(row[static_cast<size_t>(cx)]);
      ys.push_back(cy >= 0 ? row[static_cast<size_t>(cy)] : row[static_cast<size_t>(tc)]);
    }
    ax.push_back(std::move(xs));
    ay.push_back(std::move(ys));
  }
  std::vector<double> sx, sy;
  const int cx = data.column("xstar_1");
  const int cy = data.column("xstar_2");
  if (cx >= 0)
    for (const auto& row : data.rows) {
      sx.push_back(row[static_cast<size_t>(cx)]);
      sy.push_back(cy >= 0 ? row[static_cast<size_t>(cy)] : row[static_cast<size_t>(tc)]);
    }
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const std::string& name : {"ex_norm", "track_max", "grad_sum"}) {
    const int c = data.column(name);
    if (c < 0) continue;
    std::vector<double> vals;
    for (const auto& row : data.rows) vals.push_back(row[static_cast<size_t>(c)]);
    series.emplace_back(name, std::move(vals));
  }
  return svg_string(title, times, ax, ay, sx, sy, series);
}

// ---------------------------------------------------------------------------
// Condition report and meta output

struct ScenarioReport {
  double lam2 = 0.0;
  bool connected = false;
  bool has_conditions = false;
  GainConditionReport conditions;
  bool has_gain_bounds = false;
  GainBounds gain_bounds;
  bool has_swarm_bound = false;
  SwarmBetaBound swarm_bound;
  bool has_layer_bound = false;
  double layer_bound = 0.0;
  std::vector<std::string> warnings;
};

inline ScenarioReport scenario_report(const ScenarioConfig& cfg) {
  ScenarioReport rep;
  const Graph g0 =
      cfg.proximity ? proximity_graph(cfg.x0, cfg.prox_radius) : cfg.static_graph;
  rep.connected = cfg.agents <= 1 || is_connected(g0);
  rep.lam2 = cfg.agents >= 2 ? lambda2(g0) : 0.0;
  if (!rep.connected && !law_is_centralized(cfg.law))
    rep.warnings.push_back(
        "graph is disconnected: the consensus hypotheses behind this law do not apply");

  const bool layer_law =
      cfg.law == Law::BoundaryTimevarying || cfg.law == Law::BoundaryFixed;
  if (cfg.law == Law::DistributedDouble || layer_law) {
    rep.has_conditions = true;
    rep.conditions = check_gain_conditions(
        cfg.gains, rep.lam2, layer_law,
        cfg.gains.psi > 0.0 ? std::optional<double>(cfg.gains.psi) : std::nullopt);
    if (!rep.conditions.all_pass)
      rep.warnings.push_back("gain conditions fail; consensus is not guaranteed");
  }

  const bool identical =
      [&] {
        try {
          identical_hessian(cfg.costs);
          return true;
        } catch (const std::exception&) {
          return false;
        }
      }();

  if (identical && (cfg.law == Law::DistributedSingle || cfg.law == Law::DistributedDouble ||
                    layer_law)) {
    try {
      const SignalSpread spread =
          signal_spread(cfg.costs, 0.0, cfg.integrator.t_end);
      rep.gain_bounds = conservative_gain_bounds(cfg.x0, cfg.v0, spread, cfg.gains, g0,
                                          law_is_double(cfg.law), cfg.costs);
      rep.has_gain_bounds = true;
      if (cfg.law == Law::BoundaryFixed && rep.conditions.psi > 0.0) {
        rep.layer_bound = fixed_layer_error_bound(cfg.gains, cfg.agents, cfg.dim,
                                                  rep.gain_bounds.phi_bar,
                                                  rep.conditions.psi, g0);
        rep.has_layer_bound = true;
      }
    } catch (const std::exception& e) {
      rep.warnings.push_back(std::string("gain bounds unavailable: ") + e.what());
    }
  }

  if (cfg.swarm && identical) {
    try {
      const Eigen::MatrixXd h = identical_hessian(cfg.costs);
      const Eigen::VectorXd evals = symmetric_eigenvalues(h);
      const bool scalar_h = (evals(evals.size() - 1) - evals(0)) < 1e-12;
      if (scalar_h) {
        const double sigma = evals(0);
        const SignalBounds sb = signal_bounds(cfg.costs, 0.0, cfg.integrator.t_end);
        const PotentialSpec spec = PotentialSpec::from_initial_positions(
            cfg.x0, cfg.swarm->radius, cfg.swarm->desired);
        rep.swarm_bound = swarm_beta_bound(cfg.x0, sb.g_bar, sb.gdot_bar, sigma, spec,
                                           cfg.gains.gamma_margin);
        rep.has_swarm_bound = true;
      }
    } catch (const std::exception& e) {
      rep.warnings.push_back(std::string("swarm gain bound unavailable: ") + e.what());
    }
  }
  return rep;
}

inline json report_to_json(const ScenarioReport& rep) {
  json j;
  j["connected"] = rep.connected;
  j["lambda2"] = rep.lam2;
  if (rep.has_conditions) {
    json conds = json::array();
    for (const GainCondition& c : rep.conditions.conditions)
      conds.push_back({{"name", c.name},
                       {"lhs", c.lhs},
                       {"rhs", c.rhs},
                       {"pass", c.pass}});
    j["gain_conditions"] = conds;
    j["psi"] = rep.conditions.psi;
    j["all_conditions_pass"] = rep.conditions.all_pass;
  }
  if (rep.has_gain_bounds)
    j["gain_bounds"] = {{"beta_x", rep.gain_bounds.beta_x},
                        {"beta_v", rep.gain_bounds.beta_v},
                        {"phi_bar", rep.gain_bounds.phi_bar},
                        {"beta_bar", rep.gain_bounds.beta_bar}};
  if (rep.has_swarm_bound)
    j["swarm_bound"] = {{"beta_x", rep.swarm_bound.beta_x},
                        {"phi_l1_bound", rep.swarm_bound.phi_l1_bound},
                        {"beta", rep.swarm_bound.beta}};
  if (rep.has_layer_bound) j["tracking_error_bound"] = rep.layer_bound;
  j["warnings"] = rep.warnings;
  return j;
}

inline std::string report_text(const ScenarioConfig& cfg, const ScenarioReport& rep) {
  std::ostringstream out;
  out << "scenario: " << cfg.name << " (" << cfg.algorithm
      << (cfg.swarm ? "+swarm" : "") << ")\n";
  out << "graph: n=" << cfg.agents;
  if (cfg.agents >= 2) {
    out << ", connected=" << (rep.connected ? "yes" : "no")
        << ", lambda2 = " << fmt_short(rep.lam2);
  }
  out << "\n";
  if (!rep.connected) out << "disconnected: theorems inapplicable\n";
  if (rep.has_conditions) {
    for (const GainCondition& c : rep.conditions.conditions) {
      out << c.name << " : " << fmt_short(c.lhs) << (c.strict_less ? " < " : " > ")
          << fmt_short(c.rhs) << " : " << (c.pass ? "PASS" : "FAIL") << "\n";
    }
    if (rep.conditions.psi_searched)
      out << "psi = " << fmt_short(rep.conditions.psi)
          << " (largest feasible on grid)\n";
  }
  if (rep.has_gain_bounds) {
    out << "beta_x = " << fmt_short(rep.gain_bounds.beta_x)
        << ", beta_v = " << fmt_short(rep.gain_bounds.beta_v)
        << ", phi_bar = " << fmt_short(rep.gain_bounds.phi_bar)
        << ", beta_bar = " << fmt_short(rep.gain_bounds.beta_bar) << "\n";
  }
  if (rep.has_layer_bound)
    out << "tracking error bound = " << fmt_short(rep.layer_bound) << "\n";
  if (rep.has_swarm_bound) {
    out << "swarm beta bound = " << fmt_short(rep.swarm_bound.beta)
        << " (configured beta = " << fmt_short(cfg.swarm->beta) << ")\n";
  }
  for (const std::string& w : rep.warnings)
    out << "warning: " << (cfg.expect_violation ? "(expected) " : "") << w << "\n";
  return out.str();
}

/// Summary metrics embedded in the meta report next to the resolved config.
inline json summary_json(const ScenarioConfig& cfg, const TrajectoryLog& log) {
  json j;
  if (log.samples() == 0) return j;
  const Metrics& last = log.metrics.back();
  j["t_end"] = log.times.back();
  j["final_tracking_error"] = last.track_max;
  j["final_consensus_error"] = last.ex_norm;
  j["final_grad_sum"] = last.grad_sum_norm;
  j["final_center_error"] = last.center_err;
  j["min_pair_distance"] = [&] {
    double v = std::numeric_limits<double>::infinity();
    for (const Metrics& m : log.metrics) v = std::min(v, m.min_pair_dist);
    return std::isfinite(v) ? v : 0.0;
  }();
  j["control_total_variation"] = last.tv_u;
  const bool double_law = law_is_double(cfg.law);
  j["observed_phi_spread"] = observed_phi_spread(log, cfg.costs, double_law);
  j["observed_phi_l1_max"] = observed_phi_l1_max(log, cfg.costs, double_law);
  if (cfg.law == Law::EstimatorSingle || cfg.law == Law::EstimatorDouble) {
    double lock = -1.0;
    for (size_t k = 0; k < log.samples(); ++k) {
      if (log.metrics[k].est_err < 1e-3) {
        lock = log.times[k];
        break;
      }
    }
    j["estimator_lock_time"] = lock;
    j["final_estimator_error"] = last.est_err;
  }
  return j;
}

inline json meta_json(const ScenarioConfig& cfg, const ScenarioReport& rep,
                      const TrajectoryLog& log) {
  json j;
  j["config"] = serialize_scenario(cfg);
  j["report"] = report_to_json(rep);
  j["summary"] = summary_json(cfg, log);
  return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace tvopt
