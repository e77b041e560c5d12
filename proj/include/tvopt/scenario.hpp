#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvopt/controllers.hpp"
#include "tvopt/costs.hpp"
#include "tvopt/graph.hpp"

namespace tvopt {

using json = nlohmann::json;

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic uniform source. mt19937_64 output is pinned by the standard
/// and the uint-to-double mapping avoids the implementation-defined
/// distribution adapters, so seeded states replay bit-identically everywhere.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }
};

enum class Law {
  CentralizedSingle,
  DistributedSingle,
  EstimatorSingle,
  CentralizedDouble,
  DistributedDouble,
  EstimatorDouble,
  BoundaryTimevarying,
  BoundaryFixed,
  SwarmSingle,
  SwarmDouble,
};

inline bool law_is_double(Law a) {
  switch (a) {
    case Law::CentralizedDouble:
    case Law::DistributedDouble:
    case Law::EstimatorDouble:
    case Law::BoundaryTimevarying:
    case Law::BoundaryFixed:
    case Law::SwarmDouble:
      return true;
    default:
      return false;
  }
}

inline bool law_uses_signum(Law a) {
  switch (a) {
    case Law::DistributedSingle:
    case Law::EstimatorSingle:
    case Law::DistributedDouble:
    case Law::EstimatorDouble:
    case Law::SwarmSingle:
    case Law::SwarmDouble:
      return true;
    default:
      return false;
  }
}

inline bool law_has_adaptive_gains(Law a) {
  switch (a) {
    case Law::DistributedSingle:
    case Law::DistributedDouble:
    case Law::BoundaryTimevarying:
    case Law::BoundaryFixed:
      return true;
    default:
      return false;
  }
}

inline bool law_is_centralized(Law a) {
  return a == Law::CentralizedSingle || a == Law::CentralizedDouble;
}

struct IntegratorConfig {
  enum class Method { Euler, Rk4 };
  Method method = Method::Euler;
  double dt = 0.0;  // 0 = pick the per-class default
  double t_end = 20.0;
  int log_stride = 0;  // 0 = aim for ~1000 samples
};

struct GraphSpec {
  std::string kind = "ring";  // ring | complete | edges | proximity
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based after parsing
  double radius = 0.0;
};

struct SwarmSpec {
  double radius = 0.0;
  double desired = 0.0;
  double beta = 0.0;
  double alpha = 1.0;
};

struct Tolerances {
  double tracking = 0.1;
  double consensus = 0.05;
  double window = 5.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string algorithm;
  GraphSpec graph;
  std::vector<CostModel> costs;
  Eigen::MatrixXd x0;  // agents x m
  Eigen::MatrixXd v0;  // empty for single-integrator runs
  std::optional<std::uint64_t> init_seed;
  double init_box = 0.0;
  Eigen::VectorXd beta0;  // per edge, resolved; empty when unused
  std::optional<std::uint64_t> beta_seed;
  double beta_lo = 0.0, beta_hi = 0.0;
  GainParams gains;
  IntegratorConfig integrator;
  std::optional<SwarmSpec> swarm;
  Tolerances tolerances;
  bool expect_violation = false;

  // resolved during validation
  Law law = Law::DistributedSingle;
  int agents = 0;
  int dim = 0;
  Graph static_graph;      // empty matrices for proximity runs
  bool proximity = false;
  double prox_radius = 0.0;
};

namespace detail {

inline Law base_law_from_string(const std::string& s) {
  if (s == "centralized-single") return Law::CentralizedSingle;
  if (s == "distributed-single") return Law::DistributedSingle;
  if (s == "estimator-single") return Law::EstimatorSingle;
  if (s == "centralized-double") return Law::CentralizedDouble;
  if (s == "distributed-double") return Law::DistributedDouble;
  if (s == "estimator-double") return Law::EstimatorDouble;
  if (s == "boundary-timevarying") return Law::BoundaryTimevarying;
  if (s == "boundary-fixed") return Law::BoundaryFixed;
  throw ScenarioError("algorithm: unknown selector \"" + s + "\"");
}

inline TimeSignal signal_from_json(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind"))
    throw ScenarioError(path + ": expected an object with a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  const auto num = [&](const char* key, double fallback, bool required = false) {
    if (!j.contains(key)) {
      if (required) throw ScenarioError(path + ": missing \"" + key + "\"");
      return fallback;
    }
    return j.at(key).get<double>();
  };
  if (kind == "sin")
    return TimeSignal::sinusoid(num("amp", 0.0, true), num("omega", 0.0, true),
                                num("phase", 0.0), num("offset", 0.0));
  if (kind == "cos")
    return TimeSignal::cosine(num("amp", 0.0, true), num("omega", 0.0, true),
                              num("phase", 0.0), num("offset", 0.0));
  if (kind == "damped")
    return TimeSignal::damped(num("amp", 0.0, true), num("omega", 0.0, true));
  if (kind == "const") return TimeSignal::constant(num("value", 0.0, true));
  throw ScenarioError(path + ": unknown signal kind \"" + kind + "\"");
}

inline json signal_to_json(const TimeSignal& s) {
  switch (s.kind) {
    case TimeSignal::Kind::Sinusoid:
      return {{"kind", "sin"}, {"amp", s.amp}, {"omega", s.omega}, {"phase", s.phase},
              {"offset", s.offset}};
    case TimeSignal::Kind::Cosine:
      return {{"kind", "cos"}, {"amp", s.amp}, {"omega", s.omega}, {"phase", s.phase},
              {"offset", s.offset}};
    case TimeSignal::Kind::DampedRational:
      return {{"kind", "damped"}, {"amp", s.amp}, {"omega", s.omega}};
    case TimeSignal::Kind::Constant:
      return {{"kind", "const"}, {"value", s.offset}};
  }
  return {};
}

/// The six-agent planar cost families used by the shipped experiments.
inline std::vector<CostModel> cost_family(const std::string& preset) {
  std::vector<CostModel> costs;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  if (preset == "fig1" || preset == "fig2" || preset == "fig4") {
    for (int i = 1; i <= 6; ++i) {
      CostModel c;
      c.a = eye;
      c.g = {TimeSignal::sinusoid(-static_cast<double>(i), 1.0),
             TimeSignal::cosine(-static_cast<double>(i), 1.0)};
      costs.push_back(std::move(c));
    }
    return costs;
  }
  if (preset == "fig3") {
    for (int i = 1; i <= 6; ++i) {
      CostModel c;
      c.a = eye / static_cast<double>(i);
      c.g = {TimeSignal::sinusoid(-1.0, 1.0), TimeSignal::cosine(-1.0, 1.0)};
      costs.push_back(std::move(c));
    }
    return costs;
  }
  if (preset == "fig5") {
    for (int i = 1; i <= 6; ++i) {
      CostModel c;
      c.a = eye;
      c.g = {TimeSignal::damped(2.0 * i, 0.5), TimeSignal::sinusoid(static_cast<double>(i), 0.1)};
      costs.push_back(std::move(c));
    }
    return costs;
  }
  throw ScenarioError("costs.preset: unknown preset \"" + preset + "\"");
}

inline std::vector<CostModel> costs_from_json(const json& j) {
  if (j.is_object() && j.contains("preset"))
    return cost_family(j.at("preset").get<std::string>());
  if (!j.is_object() || !j.contains("agents"))
    throw ScenarioError("costs: expected {\"preset\": ...} or {\"agents\": [...]} ");
  std::vector<CostModel> costs;
  const json& agents = j.at("agents");
  if (!agents.is_array() || agents.empty())
    throw ScenarioError("costs.agents: expected a nonempty array");
  for (size_t i = 0; i < agents.size(); ++i) {
    const json& a = agents[i];
    const std::string path = "costs.agents[" + std::to_string(i) + "]";
    if (!a.contains("A") || !a.contains("g"))
      throw ScenarioError(path + ": each agent cost needs \"A\" and \"g\"");
    const json& am = a.at("A");
    const int m = static_cast<int>(am.size());
    CostModel c;
    c.a.resize(m, m);
    for (int r = 0; r < m; ++r) {
      if (static_cast<int>(am[static_cast<size_t>(r)].size()) != m)
        throw ScenarioError(path + ".A: must be a square matrix");
      for (int col = 0; col < m; ++col)
        c.a(r, col) = am[static_cast<size_t>(r)][static_cast<size_t>(col)].get<double>();
    }
    const json& gj = a.at("g");
    if (static_cast<int>(gj.size()) != m)
      throw ScenarioError(path + ".g: needs one signal per coordinate");
    for (size_t k = 0; k < gj.size(); ++k)
      c.g.push_back(signal_from_json(gj[k], path + ".g[" + std::to_string(k) + "]"));
    costs.push_back(std::move(c));
  }
  return costs;
}

inline Eigen::MatrixXd matrix_from_json(const json& rows, int expect_cols,
                                        const std::string& path) {
  if (!rows.is_array() || rows.empty())
    throw ScenarioError(path + ": expected a nonempty array of rows");
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows[0].size());
  if (expect_cols > 0 && m != expect_cols)
    throw ScenarioError(path + ": rows must have " + std::to_string(expect_cols) +
                        " entries");
  Eigen::MatrixXd out(n, m);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != m)
      throw ScenarioError(path + ": ragged rows");
    for (int k = 0; k < m; ++k)
      out(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)].get<double>();
  }
  return out;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Fully expanded configurations for the shipped experiments. Gains and cost
/// families follow the reference parameter sets; initial states are fixed so
/// runs replay exactly.
inline json preset_scenario(const std::string& name) {
  const json spread_positions = {{2.0, -2.5}, {-3.0, 1.5}, {1.0, 3.0},
                                 {-1.5, -1.0}, {3.5, 0.5}, {-2.5, -3.0}};
  if (name == "fig1") {
    return {{"name", "fig1"},
            {"algorithm", "distributed-single"},
            {"graph", {{"kind", "ring"}, {"n", 6}}},
            {"costs", {{"preset", "fig1"}}},
            {"initial", {{"positions", spread_positions}}},
            {"beta0", {{"seed", 3}, {"min", 0.1}, {"max", 2.0}}},
            {"integrator",
             {{"method", "euler"}, {"dt", 1e-4}, {"t_end", 20.0}, {"log_stride", 200}}}};
  }
  if (name == "fig2") {
    return {{"name", "fig2"},
            {"algorithm", "distributed-double"},
            {"graph", {{"kind", "ring"}, {"n", 6}}},
            {"costs", {{"preset", "fig2"}}},
            {"initial", {{"positions", spread_positions}}},
            {"beta0", {{"seed", 3}, {"min", 0.1}, {"max", 2.0}}},
            {"gains", {{"mu", 5.0}, {"alpha", 12.0}, {"gamma", 5.0}, {"zeta", 12.0}}},
            {"integrator",
             {{"method", "euler"}, {"dt", 1e-4}, {"t_end", 20.0}, {"log_stride", 200}}}};
  }
  if (name == "fig3") {
    const json near_opt = {{0.8, 2.2}, {-1.2, 1.0}, {1.5, 0.6},
                           {-0.5, 2.8}, {0.2, 0.2}, {-1.8, 2.4}};
    return {{"name", "fig3"},
            {"algorithm", "estimator-double"},
            {"graph", {{"kind", "ring"}, {"n", 6}}},
            {"costs", {{"preset", "fig3"}}},
            {"initial", {{"positions", near_opt}}},
            {"gains", {{"kappa", 12.0}, {"rho", 2.0}, {"alpha1", 0.1}}},
            {"integrator",
             {{"method", "euler"}, {"dt", 1e-5}, {"t_end", 20.0}, {"log_stride", 2000}}}};
  }
  if (name == "fig4") {
    return {{"name", "fig4"},
            {"algorithm", "boundary-fixed"},
            {"graph", {{"kind", "ring"}, {"n", 6}}},
            {"costs", {{"preset", "fig4"}}},
            {"initial", {{"positions", spread_positions}}},
            {"beta0", {{"seed", 3}, {"min", 0.1}, {"max", 2.0}}},
            {"gains",
             {{"mu", 5.0}, {"alpha", 10.0}, {"gamma", 5.0}, {"zeta", 5.0}, {"epsilon", 2.0}}},
            {"integrator",
             {{"method", "rk4"}, {"dt", 1e-3}, {"t_end", 20.0}, {"log_stride", 20}}}};
  }
  if (name == "fig5") {
    const json hexagon = {{1.5, 0.0},  {0.75, 1.299038105676658},
                          {-0.75, 1.299038105676658}, {-1.5, 0.0},
                          {-0.75, -1.299038105676658}, {0.75, -1.299038105676658}};
    return {{"name", "fig5"},
            {"algorithm", "distributed-double"},
            {"graph", {{"kind", "proximity"}, {"R", 5.0}}},
            {"costs", {{"preset", "fig5"}}},
            {"initial", {{"positions", hexagon}}},
            {"swarm", {{"R", 5.0}, {"d", 0.5}, {"beta", 20.0}, {"alpha", 1.0}}},
            {"integrator",
             {{"method", "euler"}, {"dt", 1e-4}, {"t_end", 50.0}, {"log_stride", 500}}}};
  }
  throw ScenarioError("preset: unknown preset \"" + name + "\"");
}

inline ScenarioConfig parse_scenario_json(json j);

inline ScenarioConfig parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario is not well-formed JSON: " + std::string(e.what()));
  }
  return parse_scenario_json(std::move(j));
}

inline ScenarioConfig parse_scenario_json(json j) {
  if (!j.is_object()) throw ScenarioError("scenario: expected a JSON object");
  if (j.contains("preset")) {
    json base = preset_scenario(j.at("preset").get<std::string>());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "preset") base[it.key()] = it.value();
    j = std::move(base);
  }

  ScenarioConfig cfg;
  cfg.name = j.value("name", std::string("scenario"));
  if (!j.contains("algorithm")) throw ScenarioError("algorithm: required");
  cfg.algorithm = j.at("algorithm").get<std::string>();
  Law law = detail::base_law_from_string(cfg.algorithm);

  if (!j.contains("costs")) throw ScenarioError("costs: required");
  cfg.costs = detail::costs_from_json(j.at("costs"));
  cfg.dim = cfg.costs[0].dim();
  for (size_t i = 0; i < cfg.costs.size(); ++i) {
    if (cfg.costs[i].dim() != cfg.dim ||
        static_cast<int>(cfg.costs[i].g.size()) != cfg.dim)
      throw ScenarioError("costs.agents[" + std::to_string(i) +
                          "]: inconsistent dimension");
  }

  // swarm spec may redirect the distributed laws
  if (j.contains("swarm") && !j.at("swarm").is_null()) {
    const json& sw = j.at("swarm");
    SwarmSpec spec;
    spec.radius = sw.value("R", 0.0);
    spec.desired = sw.value("d", 0.0);
    spec.beta = sw.value("beta", 0.0);
    spec.alpha = sw.value("alpha", 1.0);
    if (spec.radius <= 0.0) throw ScenarioError("swarm.R: must be positive");
    if (spec.desired <= 0.0 || spec.desired >= spec.radius)
      throw ScenarioError("swarm.d: need 0 < d < R");
    if (spec.beta <= 0.0) throw ScenarioError("swarm.beta: must be positive");
    if (spec.alpha < 0.0) throw ScenarioError("swarm.alpha: must be nonnegative");
    cfg.swarm = spec;
    if (law == Law::DistributedSingle)
      law = Law::SwarmSingle;
    else if (law == Law::DistributedDouble)
      law = Law::SwarmDouble;
    else
      throw ScenarioError(
          "swarm: swarm tracking applies to distributed-single or distributed-double runs");
  }
  cfg.law = law;

  cfg.agents = law_is_centralized(law) ? 1 : static_cast<int>(cfg.costs.size());

  // graph
  if (j.contains("graph")) {
    const json& gj = j.at("graph");
    cfg.graph.kind = gj.value("kind", std::string("ring"));
    cfg.graph.n = gj.value("n", cfg.agents);
    cfg.graph.radius = gj.value("R", 0.0);
    if (gj.contains("edges")) {
      for (size_t k = 0; k < gj.at("edges").size(); ++k) {
        const json& e = gj.at("edges")[k];
        if (!e.is_array() || e.size() != 2)
          throw ScenarioError("graph.edges[" + std::to_string(k) + "]: expected [i, j]");
        const int a = e[0].get<int>(), b = e[1].get<int>();
        if (a < 1 || b < 1 || a > cfg.graph.n || b > cfg.graph.n)
          throw ScenarioError("graph.edges[" + std::to_string(k) + "]: node " +
                              std::to_string(std::max(a, b)) + " out of range for n=" +
                              std::to_string(cfg.graph.n) + " (indices are 1-based)");
        cfg.graph.edges.emplace_back(a - 1, b - 1);
      }
    }
  } else {
    cfg.graph.kind = cfg.swarm ? "proximity" : "complete";
    cfg.graph.n = cfg.agents;
    if (cfg.swarm) cfg.graph.radius = cfg.swarm->radius;
  }
  if (!law_is_centralized(law) && cfg.graph.kind != "proximity" &&
      cfg.graph.n != cfg.agents)
    throw ScenarioError("graph.n: must match the number of agent costs (" +
                        std::to_string(cfg.agents) + ")");

  if (cfg.graph.kind == "proximity") {
    if (cfg.swarm && cfg.graph.radius == 0.0) cfg.graph.radius = cfg.swarm->radius;
    if (cfg.graph.radius <= 0.0) throw ScenarioError("graph.R: must be positive");
    if (cfg.swarm && cfg.graph.radius != cfg.swarm->radius)
      throw ScenarioError("graph.R: must equal swarm.R for swarm runs");
    cfg.proximity = true;
    cfg.prox_radius = cfg.graph.radius;
    if (law_has_adaptive_gains(law))
      throw ScenarioError(
          "graph: adaptive-gain laws need a static graph; proximity graphs pair with "
          "estimator or swarm runs");
  } else if (cfg.graph.kind == "ring") {
    cfg.static_graph = make_ring(cfg.graph.n);
  } else if (cfg.graph.kind == "complete") {
    cfg.static_graph = make_complete(cfg.graph.n);
  } else if (cfg.graph.kind == "edges") {
    cfg.static_graph = graph_from_edges(cfg.graph.n, cfg.graph.edges);
  } else {
    throw ScenarioError("graph.kind: unknown kind \"" + cfg.graph.kind + "\"");
  }
  if (cfg.swarm && !cfg.proximity)
    throw ScenarioError("graph.kind: swarm runs use the proximity graph");

  // initial state
  if (!j.contains("initial")) throw ScenarioError("initial: required");
  const json& init = j.at("initial");
  if (init.contains("positions")) {
    cfg.x0 = detail::matrix_from_json(init.at("positions"), cfg.dim, "initial.positions");
    if (static_cast<int>(cfg.x0.rows()) != cfg.agents)
      throw ScenarioError("initial.positions: expected " + std::to_string(cfg.agents) +
                          " rows");
    if (init.contains("seed")) cfg.init_seed = init.at("seed").get<std::uint64_t>();
  } else if (init.contains("seed")) {
    cfg.init_seed = init.at("seed").get<std::uint64_t>();
    cfg.init_box = init.value("box", 4.0);
    if (cfg.init_box <= 0.0) throw ScenarioError("initial.box: must be positive");
    Rng rng(*cfg.init_seed);
    cfg.x0.resize(cfg.agents, cfg.dim);
    for (int i = 0; i < cfg.agents; ++i)
      for (int k = 0; k < cfg.dim; ++k)
        cfg.x0(i, k) = rng.uniform(-cfg.init_box, cfg.init_box);
  } else {
    throw ScenarioError("initial: give explicit positions or a seed");
  }
  if (law_is_double(law)) {
    if (init.contains("velocities")) {
      cfg.v0 = detail::matrix_from_json(init.at("velocities"), cfg.dim,
                                        "initial.velocities");
      if (cfg.v0.rows() != cfg.x0.rows())
        throw ScenarioError("initial.velocities: row count must match positions");
    } else {
      cfg.v0 = Eigen::MatrixXd::Zero(cfg.agents, cfg.dim);
    }
  } else if (init.contains("velocities")) {
    throw ScenarioError("initial.velocities: single-integrator runs have no velocities");
  }

  // gains
  if (j.contains("gains")) {
    const json& gj = j.at("gains");
    if (gj.contains("alpha2"))
      throw ScenarioError("gains.alpha2: derived from alpha1, do not set it");
    GainParams& p = cfg.gains;
    p.tau = gj.value("tau", p.tau);
    p.mu = gj.value("mu", p.mu);
    p.alpha = gj.value("alpha", p.alpha);
    p.gamma = gj.value("gamma", p.gamma);
    p.zeta = gj.value("zeta", p.zeta);
    p.eta = gj.value("eta", p.eta);
    p.alpha1 = gj.value("alpha1", p.alpha1);
    p.kappa = gj.value("kappa", p.kappa);
    p.rho = gj.value("rho", p.rho);
    p.est_alpha = gj.value("est_alpha", p.est_alpha);
    p.est_beta = gj.value("est_beta", p.est_beta);
    p.est_gamma = gj.value("est_gamma", p.est_gamma);
    p.layer.epsilon = gj.value("epsilon", p.layer.epsilon);
    p.layer.c = gj.value("c", p.layer.c);
    p.pd_floor = gj.value("pd_floor", p.pd_floor);
    p.gamma_margin = gj.value("gamma_margin", p.gamma_margin);
    p.psi = gj.value("psi", p.psi);
  }
  if (law == Law::EstimatorSingle && (cfg.gains.eta <= 0.0 || cfg.gains.eta >= 1.0))
    throw ScenarioError("gains.eta: need 0 < eta < 1");
  if (law == Law::EstimatorDouble &&
      (cfg.gains.alpha1 <= 0.0 || cfg.gains.alpha1 >= 1.0))
    throw ScenarioError("gains.alpha1: need 0 < alpha1 < 1");
  if (cfg.gains.layer.epsilon < 0.0) throw ScenarioError("gains.epsilon: must be nonnegative");
  if (law == Law::BoundaryFixed) {
    if (cfg.gains.layer.epsilon <= 0.0)
      throw ScenarioError("gains.epsilon: boundary-fixed needs a positive layer");
    if (cfg.gains.layer.c != 0.0)
      throw ScenarioError("gains.c: boundary-fixed keeps the layer constant (c = 0)");
  }
  if (law == Law::BoundaryTimevarying) {
    if (cfg.gains.layer.epsilon <= 0.0 || cfg.gains.layer.c <= 0.0)
      throw ScenarioError(
          "gains: boundary-timevarying needs positive epsilon and decay rate c");
  }

  // adaptive edge gains
  if (law_has_adaptive_gains(law)) {
    const int e = cfg.static_graph.edge_count();
    if (j.contains("beta0")) {
      const json& b = j.at("beta0");
      if (b.is_number()) {
        cfg.beta0 = Eigen::VectorXd::Constant(e, b.get<double>());
      } else if (b.is_array()) {
        if (static_cast<int>(b.size()) != e)
          throw ScenarioError("beta0: expected one value per edge (" +
                              std::to_string(e) + ")");
        cfg.beta0.resize(e);
        for (int k = 0; k < e; ++k) cfg.beta0(k) = b[static_cast<size_t>(k)].get<double>();
      } else if (b.is_object() && b.contains("seed")) {
        cfg.beta_seed = b.at("seed").get<std::uint64_t>();
        cfg.beta_lo = b.value("min", 0.0);
        cfg.beta_hi = b.value("max", 1.0);
        Rng rng(*cfg.beta_seed);
        cfg.beta0.resize(e);
        for (int k = 0; k < e; ++k) cfg.beta0(k) = rng.uniform(cfg.beta_lo, cfg.beta_hi);
      } else {
        throw ScenarioError("beta0: expected a number, per-edge array, or {seed,min,max}");
      }
      if (cfg.beta0.size() > 0 && cfg.beta0.minCoeff() < 0.0)
        throw ScenarioError("beta0: gains must be nonnegative");
    } else {
      cfg.beta0 = Eigen::VectorXd::Zero(e);
    }
  }

  // integrator
  if (j.contains("integrator")) {
    const json& ij = j.at("integrator");
    const std::string method = ij.value("method", std::string());
    if (method == "euler")
      cfg.integrator.method = IntegratorConfig::Method::Euler;
    else if (method == "rk4")
      cfg.integrator.method = IntegratorConfig::Method::Rk4;
    else if (!method.empty())
      throw ScenarioError("integrator.method: expected \"euler\" or \"rk4\"");
    else
      cfg.integrator.method = law_uses_signum(law) ? IntegratorConfig::Method::Euler
                                                   : IntegratorConfig::Method::Rk4;
    cfg.integrator.dt = ij.value("dt", 0.0);
    cfg.integrator.t_end = ij.value("t_end", 20.0);
    cfg.integrator.log_stride = ij.value("log_stride", 0);
  } else {
    cfg.integrator.method = law_uses_signum(law) ? IntegratorConfig::Method::Euler
                                                 : IntegratorConfig::Method::Rk4;
  }
  if (cfg.integrator.dt == 0.0)
    cfg.integrator.dt = law_uses_signum(law) ? 1e-4 : 1e-3;
  if (cfg.integrator.dt <= 0.0) throw ScenarioError("integrator.dt: must be positive");
  if (cfg.integrator.t_end <= 0.0)
    throw ScenarioError("integrator.t_end: must be positive");
  if (law_uses_signum(law) && cfg.integrator.method == IntegratorConfig::Method::Rk4)
    throw ScenarioError(
        "integrator.method: this law switches on the signum path; integrate with euler");
  if (cfg.integrator.log_stride == 0) {
    const double steps = cfg.integrator.t_end / cfg.integrator.dt;
    cfg.integrator.log_stride = std::max(1, static_cast<int>(steps / 1000.0));
  }
  if (cfg.integrator.log_stride < 1)
    throw ScenarioError("integrator.log_stride: must be at least 1");

  if (j.contains("tolerances")) {
    const json& tj = j.at("tolerances");
    cfg.tolerances.tracking = tj.value("tracking", cfg.tolerances.tracking);
    cfg.tolerances.consensus = tj.value("consensus", cfg.tolerances.consensus);
    cfg.tolerances.window = tj.value("window", cfg.tolerances.window);
  }
  cfg.expect_violation = j.value("expect_violation", false);
  return cfg;
}

/// Resolved config back to JSON; parse(serialize(cfg)) reproduces the run.
inline json serialize_scenario(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["algorithm"] = cfg.algorithm;
  json gj;
  gj["kind"] = cfg.graph.kind;
  if (cfg.graph.kind == "proximity") {
    gj["R"] = cfg.graph.radius;
  } else {
    gj["n"] = cfg.graph.n;
    if (cfg.graph.kind == "edges") {
      json edges = json::array();
      for (auto [a, b] : cfg.graph.edges) edges.push_back({a + 1, b + 1});
      gj["edges"] = edges;
    }
  }
  j["graph"] = gj;
  json agents = json::array();
  for (const CostModel& c : cfg.costs) {
    json a;
    a["A"] = detail::matrix_to_json(c.a);
    json sigs = json::array();
    for (const TimeSignal& s : c.g) sigs.push_back(detail::signal_to_json(s));
    a["g"] = sigs;
    agents.push_back(std::move(a));
  }
  j["costs"] = {{"agents", agents}};
  json init;
  init["positions"] = detail::matrix_to_json(cfg.x0);
  if (cfg.v0.size() > 0) init["velocities"] = detail::matrix_to_json(cfg.v0);
  if (cfg.init_seed) init["seed"] = *cfg.init_seed;
  j["initial"] = init;
  if (cfg.beta0.size() > 0) {
    json b = json::array();
    for (Eigen::Index k = 0; k < cfg.beta0.size(); ++k) b.push_back(cfg.beta0(k));
    j["beta0"] = b;
  }
  const GainParams& p = cfg.gains;
  j["gains"] = {{"tau", p.tau},       {"mu", p.mu},
                {"alpha", p.alpha},   {"gamma", p.gamma},
                {"zeta", p.zeta},     {"eta", p.eta},
                {"alpha1", p.alpha1}, {"kappa", p.kappa},
                {"rho", p.rho},       {"est_alpha", p.est_alpha},
                {"est_beta", p.est_beta}, {"est_gamma", p.est_gamma},
                {"epsilon", p.layer.epsilon}, {"c", p.layer.c},
                {"pd_floor", p.pd_floor}, {"gamma_margin", p.gamma_margin},
                {"psi", p.psi}};
  j["integrator"] = {
      {"method", cfg.integrator.method == IntegratorConfig::Method::Euler ? "euler" : "rk4"},
      {"dt", cfg.integrator.dt},
      {"t_end", cfg.integrator.t_end},
      {"log_stride", cfg.integrator.log_stride}};
  if (cfg.swarm)
    j["swarm"] = {{"R", cfg.swarm->radius},
                  {"d", cfg.swarm->desired},
                  {"beta", cfg.swarm->beta},
                  {"alpha", cfg.swarm->alpha}};
  j["tolerances"] = {{"tracking", cfg.tolerances.tracking},
                     {"consensus", cfg.tolerances.consensus},
                     {"window", cfg.tolerances.window}};
  j["expect_violation"] = cfg.expect_violation;
  return j;
}

}  // namespace tvopt
