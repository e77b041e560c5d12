#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvopt/controllers.hpp"
#include "tvopt/costs.hpp"
#include "tvopt/graph.hpp"
#include "tvopt/scenario.hpp"
#include "tvopt/swarm.hpp"

namespace tvopt {

struct SimAbort : std::runtime_error {
  long step;
  double t;
  SimAbort(const std::string& what, long step_, double t_)
      : std::runtime_error(what), step(step_), t(t_) {}
};

/// e_X = X - replicated row mean (and e_V alike); zero iff all rows equal.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> consensus_errors(
    const Eigen::MatrixXd& x, const Eigen::MatrixXd& v = Eigen::MatrixXd()) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd ex = x.rowwise() - mean;
  Eigen::MatrixXd ev;
  if (v.size() > 0) {
    const Eigen::RowVectorXd vmean = v.colwise().mean();
    ev = v.rowwise() - vmean;
  }
  return {std::move(ex), std::move(ev)};
}

enum class LyapKind { CentralizedSingle, CentralizedDouble, GradientSum };

inline LyapKind lyap_kind_for(Law law) {
  if (law == Law::CentralizedSingle) return LyapKind::CentralizedSingle;
  if (law == Law::CentralizedDouble) return LyapKind::CentralizedDouble;
  return LyapKind::GradientSum;
}

/// Energy functions probed along runs. The tracking-law energy for the
/// double case pairs the gradient with the velocity mismatch against
/// S0 = -H^{-1}(pt_grad + grad); along the closed loop its derivative is
/// exactly -||grad||^2.
inline double lyapunov_value(LyapKind kind, const std::vector<CostModel>& costs,
                             const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                             double t) {
  const int m = costs[0].dim();
  switch (kind) {
    case LyapKind::CentralizedSingle: {
      const DerivativeBundle b =
          aggregate_bundle(costs, x.row(0).transpose(), Eigen::VectorXd::Zero(m), t);
      return 0.5 * b.grad.squaredNorm();
    }
    case LyapKind::CentralizedDouble: {
      const Eigen::VectorXd vel = v.row(0).transpose();
      const DerivativeBundle b = aggregate_bundle(costs, x.row(0).transpose(), vel, t);
      const Eigen::VectorXd s0 =
          -b.hess.fullPivLu().solve((b.pt_grad + b.grad).eval());
      return 0.5 * b.grad.squaredNorm() + 0.5 * (s0 - vel).squaredNorm();
    }
    case LyapKind::GradientSum: {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
      for (size_t i = 0; i < costs.size(); ++i) {
        const Eigen::VectorXd vel =
            v.size() > 0 ? Eigen::VectorXd(v.row(static_cast<Eigen::Index>(i)).transpose())
                         : Eigen::VectorXd(Eigen::VectorXd::Zero(m));
        sum += derivatives(costs[i], x.row(static_cast<Eigen::Index>(i)).transpose(), vel, t)
                   .grad;
      }
      return 0.5 * sum.squaredNorm();
    }
  }
  return 0.0;
}

struct Metrics {
  double ex_norm = 0.0;
  double ev_norm = 0.0;
  double track_max = 0.0;
  double center_err = 0.0;
  double grad_sum_norm = 0.0;
  double min_pair_dist = 0.0;
  double connected = 1.0;
  double est_err = 0.0;
  double lyap = 0.0;
  double tv_u = 0.0;
  double beta_max = 0.0;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "ex_norm",   "ev_norm",       "track_max", "center_err",
      "grad_sum",  "min_pair_dist", "connected", "est_err",
      "lyapunov",  "tv_u",          "beta_max"};
  return names;
}

inline std::vector<double> metric_values(const Metrics& m) {
  return {m.ex_norm,       m.ev_norm,   m.track_max, m.center_err,
          m.grad_sum_norm, m.min_pair_dist, m.connected, m.est_err,
          m.lyap,          m.tv_u,      m.beta_max};
}

struct TrajectoryLog {
  int n = 0, m = 0;
  bool has_velocity = false;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> x, v, u;
  std::vector<Eigen::VectorXd> beta;
  std::vector<Eigen::MatrixXd> est_state;  // flattened estimator internals
  std::vector<Eigen::VectorXd> xstar, vstar;
  std::vector<Metrics> metrics;

  size_t samples() const { return times.size(); }
};

namespace detail {

inline TeamState make_initial_state(const ScenarioConfig& cfg) {
  TeamState s;
  s.t = 0.0;
  s.x = cfg.x0;
  if (law_is_double(cfg.law)) s.v = cfg.v0;
  if (law_has_adaptive_gains(cfg.law)) s.beta = cfg.beta0;
  const int n = cfg.agents, m = cfg.dim;
  if (cfg.law == Law::EstimatorSingle) {
    EstimatorSingleState est;
    est.xi = Eigen::MatrixXd::Zero(n, m);
    est.psi.assign(static_cast<size_t>(n), Eigen::MatrixXd::Zero(m, m));
    est.phi = Eigen::MatrixXd::Zero(n, m);
    s.est_single = std::move(est);
  } else if (cfg.law == Law::EstimatorDouble) {
    EstimatorDoubleState est;
    est.xi = Eigen::MatrixXd::Zero(n, 4 * m);
    est.phi.assign(static_cast<size_t>(n), Eigen::MatrixXd::Zero(2 * m, m));
    s.est_double = std::move(est);
  }
  return s;
}

inline TeamState state_axpy(const TeamState& s, const TeamState& k, double h) {
  TeamState out = s;
  out.t = s.t + h * k.t;
  out.x = s.x + h * k.x;
  if (s.v.size() > 0) out.v = s.v + h * k.v;
  if (s.beta.size() > 0) out.beta = s.beta + h * k.beta;
  if (s.est_single) {
    out.est_single->xi = s.est_single->xi + h * k.est_single->xi;
    for (size_t i = 0; i < s.est_single->psi.size(); ++i)
      out.est_single->psi[i] = s.est_single->psi[i] + h * k.est_single->psi[i];
    out.est_single->phi = s.est_single->phi + h * k.est_single->phi;
  }
  if (s.est_double) {
    out.est_double->xi = s.est_double->xi + h * k.est_double->xi;
    for (size_t i = 0; i < s.est_double->phi.size(); ++i)
      out.est_double->phi[i] = s.est_double->phi[i] + h * k.est_double->phi[i];
  }
  return out;
}

inline void deriv_accumulate(TeamState& acc, const TeamState& k, double w) {
  acc.t += w * k.t;
  acc.x += w * k.x;
  if (acc.v.size() > 0) acc.v += w * k.v;
  if (acc.beta.size() > 0) acc.beta += w * k.beta;
  if (acc.est_single) {
    acc.est_single->xi += w * k.est_single->xi;
    for (size_t i = 0; i < acc.est_single->psi.size(); ++i)
      acc.est_single->psi[i] += w * k.est_single->psi[i];
    acc.est_single->phi += w * k.est_single->phi;
  }
  if (acc.est_double) {
    acc.est_double->xi += w * k.est_double->xi;
    for (size_t i = 0; i < acc.est_double->phi.size(); ++i)
      acc.est_double->phi[i] += w * k.est_double->phi[i];
  }
}

inline bool state_is_finite(const TeamState& s) {
  if (!s.x.allFinite()) return false;
  if (s.v.size() > 0 && !s.v.allFinite()) return false;
  if (s.beta.size() > 0 && !s.beta.allFinite()) return false;
  if (s.est_single) {
    if (!s.est_single->xi.allFinite() || !s.est_single->phi.allFinite()) return false;
    for (const auto& p : s.est_single->psi)
      if (!p.allFinite()) return false;
  }
  if (s.est_double) {
    if (!s.est_double->xi.allFinite()) return false;
    for (const auto& p : s.est_double->phi)
      if (!p.allFinite()) return false;
  }
  return true;
}

struct RunContext {
  const ScenarioConfig* cfg = nullptr;
  PotentialSpec potential;  // swarm runs only
};

struct RhsResult {
  TeamState d;
  Eigen::MatrixXd u;
};

inline std::vector<DerivativeBundle> agent_bundles(const ScenarioConfig& cfg,
                                                   const TeamState& s) {
  std::vector<DerivativeBundle> bundles;
  bundles.reserve(cfg.costs.size());
  const int m = cfg.dim;
  // centralized runs hold one shared state row for the whole team
  const bool shared = law_is_centralized(cfg.law);
  for (size_t i = 0; i < cfg.costs.size(); ++i) {
    const Eigen::Index row = shared ? 0 : static_cast<Eigen::Index>(i);
    const Eigen::VectorXd xi = s.x.row(row).transpose();
    const Eigen::VectorXd vi = s.v.size() > 0
                                   ? Eigen::VectorXd(s.v.row(row).transpose())
                                   : Eigen::VectorXd(Eigen::VectorXd::Zero(m));
    bundles.push_back(derivatives(cfg.costs[i], xi, vi, s.t));
  }
  return bundles;
}

inline RhsResult rhs(const RunContext& ctx, const TeamState& s) {
  const ScenarioConfig& cfg = *ctx.cfg;
  const int m = cfg.dim;
  RhsResult r;
  r.d = s;  // copy shapes, then overwrite
  r.d.t = 1.0;

  const Graph graph = cfg.proximity ? proximity_graph(s.x, cfg.prox_radius)
                                    : cfg.static_graph;

  switch (cfg.law) {
    case Law::CentralizedSingle: {
      const DerivativeBundle b = aggregate_bundle(
          cfg.costs, s.x.row(0).transpose(), Eigen::VectorXd::Zero(m), s.t);
      r.u = centralized_single(b, cfg.gains.tau).transpose();
      r.d.x = r.u;
      break;
    }
    case Law::CentralizedDouble: {
      const DerivativeBundle b =
          aggregate_bundle(cfg.costs, s.x.row(0).transpose(), s.v.row(0).transpose(), s.t);
      r.u = centralized_double(b).transpose();
      r.d.x = s.v;
      r.d.v = r.u;
      break;
    }
    case Law::DistributedSingle: {
      const ControlStep cs = distributed_single_step(s, agent_bundles(cfg, s), graph);
      r.u = cs.u;
      r.d.x = cs.u;
      r.d.beta = cs.beta_dot;
      break;
    }
    case Law::DistributedDouble: {
      const ControlStep cs =
          distributed_double_step(s, agent_bundles(cfg, s), graph, cfg.gains);
      r.u = cs.u;
      r.d.x = s.v;
      r.d.v = cs.u;
      r.d.beta = cs.beta_dot;
      break;
    }
    case Law::BoundaryTimevarying:
    case Law::BoundaryFixed: {
      const ControlStep cs =
          continuous_double_step(s, agent_bundles(cfg, s), graph, cfg.gains);
      r.u = cs.u;
      r.d.x = s.v;
      r.d.v = cs.u;
      r.d.beta = cs.beta_dot;
      break;
    }
    case Law::EstimatorSingle: {
      const EstimatorSingleStep es =
          estimator_single_step(s, agent_bundles(cfg, s), graph, cfg.gains);
      r.u = es.u;
      r.d.x = es.u;
      r.d.est_single->xi = es.xi_dot;
      r.d.est_single->psi = es.psi_dot;
      r.d.est_single->phi = es.phi_dot;
      break;
    }
    case Law::EstimatorDouble: {
      const EstimatorDoubleStep es =
          estimator_double_step(s, agent_bundles(cfg, s), graph, cfg.gains);
      r.u = es.u;
      r.d.x = s.v;
      r.d.v = es.u;
      r.d.est_double->xi = es.xi_dot;
      r.d.est_double->phi = es.phi_dot;
      break;
    }
    case Law::SwarmSingle: {
      r.u = swarm_single_step(s, agent_bundles(cfg, s), graph, ctx.potential,
                              cfg.swarm->beta);
      r.d.x = r.u;
      break;
    }
    case Law::SwarmDouble: {
      r.u = swarm_double_step(s, agent_bundles(cfg, s), graph, ctx.potential,
                              cfg.swarm->alpha, cfg.swarm->beta);
      r.d.x = s.v;
      r.d.v = r.u;
      break;
    }
  }
  return r;
}

/// Worst per-agent deviation of the tracked estimator outputs from the
/// instantaneous network average of their reference signals (infinity norm
/// over every channel).
inline double estimator_error(const ScenarioConfig& cfg, const TeamState& s) {
  const int n = cfg.agents, m = cfg.dim;
  const std::vector<DerivativeBundle> bundles = agent_bundles(cfg, s);
  double err = 0.0;
  if (cfg.law == Law::EstimatorSingle) {
    Eigen::MatrixXd w(n, m), sig(n, m);
    std::vector<Eigen::MatrixXd> th(static_cast<size_t>(n));
    Eigen::MatrixXd th_avg = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < n; ++i) {
      w.row(i) = s.est_single->xi.row(i) + bundles[static_cast<size_t>(i)].grad.transpose();
      sig.row(i) =
          s.est_single->phi.row(i) + bundles[static_cast<size_t>(i)].pt_grad.transpose();
      th[static_cast<size_t>(i)] =
          s.est_single->psi[static_cast<size_t>(i)] + bundles[static_cast<size_t>(i)].hess;
      th_avg += th[static_cast<size_t>(i)];
    }
    th_avg /= n;
    const Eigen::RowVectorXd w_avg = w.colwise().mean();
    const Eigen::RowVectorXd sig_avg = sig.colwise().mean();
    for (int i = 0; i < n; ++i) {
      err = std::max(err, (w.row(i) - w_avg).cwiseAbs().maxCoeff());
      err = std::max(err, (sig.row(i) - sig_avg).cwiseAbs().maxCoeff());
      err = std::max(err, (th[static_cast<size_t>(i)] - th_avg).cwiseAbs().maxCoeff());
    }
  } else if (cfg.law == Law::EstimatorDouble) {
    Eigen::MatrixXd w(n, 4 * m);
    std::vector<Eigen::MatrixXd> sig(static_cast<size_t>(n));
    Eigen::MatrixXd sig_avg = Eigen::MatrixXd::Zero(2 * m, m);
    for (int i = 0; i < n; ++i) {
      const DerivativeBundle& b = bundles[static_cast<size_t>(i)];
      Eigen::VectorXd stacked(4 * m);
      stacked << b.grad, b.pt_grad, b.dt_grad, b.pt_dt_grad;
      w.row(i) = s.est_double->xi.row(i) + stacked.transpose();
      Eigen::MatrixXd th(2 * m, m);
      th << b.hess, b.dt_hess;
      sig[static_cast<size_t>(i)] = s.est_double->phi[static_cast<size_t>(i)] + th;
      sig_avg += sig[static_cast<size_t>(i)];
    }
    sig_avg /= n;
    const Eigen::RowVectorXd w_avg = w.colwise().mean();
    for (int i = 0; i < n; ++i) {
      err = std::max(err, (w.row(i) - w_avg).cwiseAbs().maxCoeff());
      err = std::max(err, (sig[static_cast<size_t>(i)] - sig_avg).cwiseAbs().maxCoeff());
    }
  }
  return err;
}

inline Eigen::MatrixXd flatten_estimator(const TeamState& s) {
  if (s.est_single) {
    const int n = static_cast<int>(s.est_single->xi.rows());
    const int m = static_cast<int>(s.est_single->xi.cols());
    Eigen::MatrixXd out(n, m + m * m + m);
    for (int i = 0; i < n; ++i) {
      out.block(i, 0, 1, m) = s.est_single->xi.row(i);
      const Eigen::MatrixXd& p = s.est_single->psi[static_cast<size_t>(i)];
      for (int r = 0; r < m; ++r) out.block(i, m + r * m, 1, m) = p.row(r);
      out.block(i, m + m * m, 1, m) = s.est_single->phi.row(i);
    }
    return out;
  }
  if (s.est_double) {
    const int n = static_cast<int>(s.est_double->xi.rows());
    const int m4 = static_cast<int>(s.est_double->xi.cols());
    const int m = m4 / 4;
    Eigen::MatrixXd out(n, m4 + 2 * m * m);
    for (int i = 0; i < n; ++i) {
      out.block(i, 0, 1, m4) = s.est_double->xi.row(i);
      const Eigen::MatrixXd& p = s.est_double->phi[static_cast<size_t>(i)];
      for (int r = 0; r < 2 * m; ++r) out.block(i, m4 + r * m, 1, m) = p.row(r);
    }
    return out;
  }
  return {};
}

}  // namespace detail

/// Fixed-step closed-loop integration; the extended state (positions,
/// velocities, adaptive gains, estimator internals) advances as one value.
/// Deterministic: same scenario, same log, bit for bit.
inline TrajectoryLog integrate(const ScenarioConfig& cfg) {
  detail::RunContext ctx;
  ctx.cfg = &cfg;
  if (cfg.swarm)
    ctx.potential =
        PotentialSpec::from_initial_positions(cfg.x0, cfg.swarm->radius, cfg.swarm->desired);

  TeamState s = detail::make_initial_state(cfg);
  const double dt = cfg.integrator.dt;
  const long nsteps = std::lround(cfg.integrator.t_end / dt);
  const int stride = cfg.integrator.log_stride;
  const bool rk4 = cfg.integrator.method == IntegratorConfig::Method::Rk4;

  TrajectoryLog log;
  log.n = cfg.agents;
  log.m = cfg.dim;
  log.has_velocity = law_is_double(cfg.law);

  Eigen::MatrixXd prev_u;
  double tv_accum = 0.0;

  for (long step = 0; step <= nsteps; ++step) {
    s.t = static_cast<double>(step) * dt;
    detail::RhsResult r;
    try {
      r = detail::rhs(ctx, s);
    } catch (const std::domain_error& e) {
      throw SimAbort(std::string(e.what()), step, s.t);
    }
    if (prev_u.size() > 0) tv_accum += (r.u - prev_u).cwiseAbs().sum();
    prev_u = r.u;

    if (step % stride == 0 || step == nsteps) {
      log.times.push_back(s.t);
      log.x.push_back(s.x);
      log.v.push_back(s.v);
      log.u.push_back(r.u);
      log.beta.push_back(s.beta);
      log.est_state.push_back(detail::flatten_estimator(s));
      const TeamOptimum opt = team_optimum(cfg.costs, s.t);
      log.xstar.push_back(opt.x);
      log.vstar.push_back(opt.v);

      Metrics met;
      const auto [ex, ev] = consensus_errors(s.x, s.v);
      met.ex_norm = ex.norm();
      met.ev_norm = ev.size() > 0 ? ev.norm() : 0.0;
      double track = 0.0;
      for (int i = 0; i < cfg.agents; ++i)
        track = std::max(track, (s.x.row(i).transpose() - opt.x).norm());
      met.track_max = track;
      met.center_err = (s.x.colwise().mean().transpose() - opt.x).norm();
      Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(cfg.dim);
      for (const DerivativeBundle& b : detail::agent_bundles(cfg, s)) grad_sum += b.grad;
      // centralized runs track the aggregate at the single state already
      met.grad_sum_norm = grad_sum.norm();
      double min_dist = 0.0;
      if (cfg.agents >= 2) {
        min_dist = std::numeric_limits<double>::infinity();
        for (int i = 0; i < cfg.agents; ++i)
          for (int k = i + 1; k < cfg.agents; ++k)
            min_dist = std::min(min_dist, (s.x.row(i) - s.x.row(k)).norm());
      }
      met.min_pair_dist = min_dist;
      const Graph graph_now =
          cfg.proximity ? proximity_graph(s.x, cfg.prox_radius) : cfg.static_graph;
      met.connected = (cfg.agents <= 1 || is_connected(graph_now)) ? 1.0 : 0.0;
      met.est_err = detail::estimator_error(cfg, s);
      met.lyap = lyapunov_value(lyap_kind_for(cfg.law), cfg.costs, s.x, s.v, s.t);
      met.tv_u = tv_accum;
      met.beta_max = s.beta.size() > 0 ? s.beta.maxCoeff() : 0.0;
      log.metrics.push_back(met);
    }
    if (step == nsteps) break;

    TeamState next;
    if (!rk4) {
      next = detail::state_axpy(s, r.d, dt);
    } else {
      TeamState k = r.d;  // accumulate k1 + 2 k2 + 2 k3 + k4
      try {
        const detail::RhsResult k2 = detail::rhs(ctx, detail::state_axpy(s, r.d, dt / 2));
        const detail::RhsResult k3 = detail::rhs(ctx, detail::state_axpy(s, k2.d, dt / 2));
        const detail::RhsResult k4 = detail::rhs(ctx, detail::state_axpy(s, k3.d, dt));
        detail::deriv_accumulate(k, k2.d, 2.0);
        detail::deriv_accumulate(k, k3.d, 2.0);
        detail::deriv_accumulate(k, k4.d, 1.0);
      } catch (const std::domain_error& e) {
        throw SimAbort(std::string(e.what()), step, s.t);
      }
      next = detail::state_axpy(s, k, dt / 6.0);
    }
    next.t = static_cast<double>(step + 1) * dt;
    if (!detail::state_is_finite(next))
      throw SimAbort("state became non-finite", step + 1, next.t);
    s = std::move(next);
  }
  return log;
}

/// W(t) along a logged run plus its finite-difference slope (length
/// samples - 1).
struct LyapunovSeries {
  std::vector<double> w;
  std::vector<double> slope;
};

inline LyapunovSeries lyapunov_probe(const TrajectoryLog& log,
                                     const std::vector<CostModel>& costs, LyapKind kind) {
  LyapunovSeries out;
  out.w.reserve(log.samples());
  for (size_t k = 0; k < log.samples(); ++k)
    out.w.push_back(lyapunov_value(kind, costs, log.x[k], log.v[k], log.times[k]));
  for (size_t k = 0; k + 1 < log.samples(); ++k)
    out.slope.push_back((out.w[k + 1] - out.w[k]) / (log.times[k + 1] - log.times[k]));
  return out;
}

/// Sup over a time grid of the pairwise signal spreads of the gradient
/// offsets ghat_i = 2 A_i^T g_i and their first two derivatives.
struct SignalSpread {
  double dg = 0.0;
  double dgdot = 0.0;
  double dgddot = 0.0;
};

inline SignalSpread signal_spread(const std::vector<CostModel>& costs, double t0,
                                  double t1, int samples = 2001) {
  SignalSpread out;
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (samples - 1.0);
    for (size_t i = 0; i < costs.size(); ++i) {
      const Eigen::VectorXd gi = 2.0 * costs[i].a.transpose() * costs[i].g_value(t);
      const Eigen::VectorXd gdi = 2.0 * costs[i].a.transpose() * costs[i].g_d1(t);
      const Eigen::VectorXd gddi = 2.0 * costs[i].a.transpose() * costs[i].g_d2(t);
      for (size_t j = i + 1; j < costs.size(); ++j) {
        const Eigen::VectorXd gj = 2.0 * costs[j].a.transpose() * costs[j].g_value(t);
        const Eigen::VectorXd gdj = 2.0 * costs[j].a.transpose() * costs[j].g_d1(t);
        const Eigen::VectorXd gddj = 2.0 * costs[j].a.transpose() * costs[j].g_d2(t);
        out.dg = std::max(out.dg, (gi - gj).norm());
        out.dgdot = std::max(out.dgdot, (gdi - gdj).norm());
        out.dgddot = std::max(out.dgddot, (gddi - gddj).norm());
      }
    }
  }
  return out;
}

/// Sup over a time grid of ||ghat_i|| and ||ghat_i'|| across agents.
struct SignalBounds {
  double g_bar = 0.0;
  double gdot_bar = 0.0;
};

inline SignalBounds signal_bounds(const std::vector<CostModel>& costs, double t0,
                                  double t1, int samples = 2001) {
  SignalBounds out;
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (samples - 1.0);
    for (const CostModel& c : costs) {
      out.g_bar = std::max(out.g_bar, (2.0 * c.a.transpose() * c.g_value(t)).norm());
      out.gdot_bar = std::max(out.gdot_bar, (2.0 * c.a.transpose() * c.g_d1(t)).norm());
    }
  }
  return out;
}

/// The shared Hessian of an identical-Hessian family (rejects others).
inline Eigen::MatrixXd identical_hessian(const std::vector<CostModel>& costs) {
  const Eigen::MatrixXd h0 = 2.0 * costs[0].a.transpose() * costs[0].a;
  for (size_t i = 1; i < costs.size(); ++i) {
    const Eigen::MatrixXd hi = 2.0 * costs[i].a.transpose() * costs[i].a;
    if ((hi - h0).cwiseAbs().maxCoeff() > 1e-12)
      throw std::runtime_error(
          "identical_hessian: this bound applies to identical-Hessian cost families only");
  }
  return h0;
}

/// Conservative adaptive-gain certificates from the initial state:
/// beta_x = beta_v = 2 sqrt(m lmax[P] / (N lmin[P]))
///          (max_i ||sum_j (x_i(0)-x_j(0))||_inf + same for v) + margin,
/// then phi_bar from the quadratic family's spread bounds at (beta_x, beta_v)
/// and beta_bar > (N-1) phi_bar / 2. For single-integrator runs the error
/// weighting is the identity, so the eigenvalue ratio drops out.
struct GainBounds {
  double beta_x = 0.0;
  double beta_v = 0.0;
  double phi_bar = 0.0;
  double beta_bar = 0.0;
};

inline GainBounds conservative_gain_bounds(const Eigen::MatrixXd& x0,
                                           const Eigen::MatrixXd& v0,
                                           const SignalSpread& spread,
                                           const GainParams& p, const Graph& g,
                                           bool double_law,
                                           const std::vector<CostModel>& costs) {
  const int n = static_cast<int>(x0.rows());
  const int m = static_cast<int>(x0.cols());
  const Eigen::MatrixXd h = identical_hessian(costs);
  const Eigen::VectorXd h_eigs = symmetric_eigenvalues(h);
  const double hmin = h_eigs(0), hmax = h_eigs(h_eigs.size() - 1);
  if (hmin <= 0.0)
    throw std::runtime_error("conservative_gain_bounds: Hessian must be positive definite");

  double ratio = 1.0;
  if (double_law) {
    const Eigen::MatrixXd big = consensus_weight_matrix(g, m, p, 0.0);
    const SubspaceEigs eigs = error_subspace_eigs(big, n, m);
    if (eigs.min_eig <= 0.0)
      throw std::runtime_error(
          "conservative_gain_bounds: P is not positive definite on the consensus-error "
          "subspace; gain conditions are violated");
    ratio = eigs.max_eig / eigs.min_eig;
  }

  const Eigen::RowVectorXd xsum = x0.colwise().sum();
  double sx = 0.0;
  for (int i = 0; i < n; ++i)
    sx = std::max(sx, (static_cast<double>(n) * x0.row(i) - xsum).cwiseAbs().maxCoeff());
  double sv = 0.0;
  if (double_law && v0.size() > 0) {
    const Eigen::RowVectorXd vsum = v0.colwise().sum();
    for (int i = 0; i < n; ++i)
      sv = std::max(sv, (static_cast<double>(n) * v0.row(i) - vsum).cwiseAbs().maxCoeff());
  }

  GainBounds out;
  const double factor = 2.0 * std::sqrt(static_cast<double>(m) * ratio / n);
  out.beta_x = factor * (sx + sv) + p.gamma_margin;
  out.beta_v = out.beta_x;
  if (double_law) {
    out.phi_bar = (spread.dgddot + spread.dgdot) / hmin + out.beta_v +
                  hmax * hmax * out.beta_x + hmax * spread.dg;
  } else {
    out.phi_bar = out.beta_x + (spread.dg + spread.dgdot) / hmin;
  }
  out.beta_bar = (n - 1.0) * out.phi_bar / 2.0 + p.gamma_margin;
  return out;
}

/// Post-hoc certificate inputs: the feedforward signals recomputed along a
/// logged run.
inline double observed_phi_spread(const TrajectoryLog& log,
                                  const std::vector<CostModel>& costs, bool double_law) {
  double worst = 0.0;
  for (size_t k = 0; k < log.samples(); ++k) {
    std::vector<Eigen::VectorXd> phis;
    for (int i = 0; i < log.n; ++i) {
      const Eigen::VectorXd xi = log.x[k].row(i).transpose();
      const Eigen::VectorXd vi =
          log.has_velocity ? Eigen::VectorXd(log.v[k].row(i).transpose())
                           : Eigen::VectorXd(Eigen::VectorXd::Zero(log.m));
      const DerivativeBundle b = derivatives(costs[static_cast<size_t>(i)], xi, vi,
                                             log.times[k]);
      phis.push_back(double_law ? phi_double(b) : phi_single(b));
    }
    for (size_t i = 0; i < phis.size(); ++i)
      for (size_t j = i + 1; j < phis.size(); ++j)
        worst = std::max(worst, (phis[i] - phis[j]).norm());
  }
  return worst;
}

inline double observed_phi_l1_max(const TrajectoryLog& log,
                                  const std::vector<CostModel>& costs, bool double_law) {
  double worst = 0.0;
  for (size_t k = 0; k < log.samples(); ++k) {
    for (int i = 0; i < log.n; ++i) {
      const Eigen::VectorXd xi = log.x[k].row(i).transpose();
      const Eigen::VectorXd vi =
          log.has_velocity ? Eigen::VectorXd(log.v[k].row(i).transpose())
                           : Eigen::VectorXd(Eigen::VectorXd::Zero(log.m));
      const DerivativeBundle b = derivatives(costs[static_cast<size_t>(i)], xi, vi,
                                             log.times[k]);
      const Eigen::VectorXd phi = double_law ? phi_double(b) : phi_single(b);
      worst = std::max(worst, phi.lpNorm<1>());
    }
  }
  return worst;
}

}  // namespace tvopt
