#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvopt/costs.hpp"
#include "tvopt/graph.hpp"
#include "tvopt/linalg.hpp"
#include "tvopt/switching.hpp"

namespace tvopt {

/// Gains shared by the control laws; each law reads the subset it needs.
struct GainParams {
  double tau = 1.0;
  double mu = 1.0;
  double alpha = 1.0;
  double gamma = 1.0;
  double zeta = 1.0;
  double eta = 0.5;     // position-coupling exponent, estimator single law
  double alpha1 = 0.5;  // position exponent, estimator double law
  double kappa = 1.0;
  double rho = 1.0;
  double est_alpha = 1.0;
  double est_beta = 1.0;
  double est_gamma = 1.0;
  LayerSpec layer;
  double pd_floor = 1e-6;
  double gamma_margin = 1.0;
  double psi = 0.0;  // 0 = search a feasible value when needed

  // velocity exponent tied to alpha1
  double alpha2() const { return 2.0 * alpha1 / (alpha1 + 1.0); }
};

/// Internal states of the three average-tracking estimators (single case).
struct EstimatorSingleState {
  Eigen::MatrixXd xi;                // n x m
  std::vector<Eigen::MatrixXd> psi;  // per agent, m x m
  Eigen::MatrixXd phi;               // n x m
};

/// Internal states of the two stacked estimators (double case).
struct EstimatorDoubleState {
  Eigen::MatrixXd xi;                // n x 4m
  std::vector<Eigen::MatrixXd> phi;  // per agent, 2m x m
};

/// Value-type snapshot of the whole team: positions, velocities, adaptive
/// edge gains, and estimator internals. Laws never mutate it.
struct TeamState {
  double t = 0.0;
  Eigen::MatrixXd x;      // n x m
  Eigen::MatrixXd v;      // n x m, empty for single-integrator runs
  Eigen::VectorXd beta;   // per edge, empty when the law has no adaptive gains
  std::optional<EstimatorSingleState> est_single;
  std::optional<EstimatorDoubleState> est_double;

  int agents() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

struct ControlStep {
  Eigen::MatrixXd u;         // n x m
  Eigen::VectorXd beta_dot;  // per edge (empty when unused)
};

struct EstimatorSingleStep {
  Eigen::MatrixXd xi_dot;
  std::vector<Eigen::MatrixXd> psi_dot;
  Eigen::MatrixXd phi_dot;
  Eigen::MatrixXd s;  // per-agent internal signal S_i
  Eigen::MatrixXd u;
};

struct EstimatorDoubleStep {
  Eigen::MatrixXd xi_dot;
  std::vector<Eigen::MatrixXd> phi_dot;
  Eigen::MatrixXd s;
  Eigen::MatrixXd u;
};

namespace detail {
inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& h, const Eigen::MatrixXd& rhs,
                                 const char* who) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible())
    throw std::runtime_error(std::string(who) +
                             ": cost Hessian is singular; this law needs an invertible "
                             "per-agent Hessian");
  return lu.solve(rhs);
}
}  // namespace detail

/// Internal feedforward for single-integrator laws:
/// phi = -H^{-1} (grad + pt_grad).
inline Eigen::VectorXd phi_single(const DerivativeBundle& b) {
  return -detail::solve_spd(b.hess, (b.grad + b.pt_grad).eval(), "phi_single");
}

/// Single-integrator tracking law u = -H^{-1} (tau * grad + pt_grad);
/// applied to a team bundle this is the aggregated form.
inline Eigen::VectorXd centralized_single(const DerivativeBundle& b, double tau) {
  return -detail::solve_spd(b.hess, (tau * b.grad + b.pt_grad).eval(),
                            "centralized_single");
}

/// Internal feedforward for double-integrator laws:
/// phi = -H^{-1}(pt_dt_grad + dt_grad) - H grad
///       + H^{-1} (dH/dt) H^{-1} (pt_grad + grad).
inline Eigen::VectorXd phi_double(const DerivativeBundle& b) {
  const Eigen::VectorXd lead =
      detail::solve_spd(b.hess, (b.pt_dt_grad + b.dt_grad).eval(), "phi_double");
  Eigen::VectorXd phi = -lead - b.hess * b.grad;
  if (b.dt_hess.cwiseAbs().maxCoeff() > 0.0) {
    const Eigen::MatrixXd hinv = detail::solve_spd(
        b.hess, Eigen::MatrixXd::Identity(b.hess.rows(), b.hess.cols()), "phi_double");
    phi += hinv * b.dt_hess * hinv * (b.pt_grad + b.grad);
  }
  return phi;
}

/// Double-integrator tracking law; same formula as phi_double on the
/// aggregated team bundle.
inline Eigen::VectorXd centralized_double(const DerivativeBundle& b) {
  return phi_double(b);
}

/// u_i = -sum_j beta_ij sgn(x_i - x_j) + phi_i,  beta_ij' = ||x_i - x_j||_1.
inline ControlStep distributed_single_step(const TeamState& s,
                                           const std::vector<DerivativeBundle>& bundles,
                                           const Graph& g) {
  const int n = s.agents();
  ControlStep out;
  out.u.resize(n, s.dim());
  for (int i = 0; i < n; ++i) out.u.row(i) = phi_single(bundles[static_cast<size_t>(i)]).transpose();
  out.beta_dot = Eigen::VectorXd::Zero(g.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::VectorXd diff = (s.x.row(i) - s.x.row(j)).transpose();
    const Eigen::VectorXd sg = sig_alpha(diff, 0.0);
    out.u.row(i) -= s.beta(k) * sg.transpose();
    out.u.row(j) += s.beta(k) * sg.transpose();
    out.beta_dot(k) = diff.lpNorm<1>();
  }
  return out;
}

/// u_i = -sum_j [mu (x_i-x_j) + alpha (v_i-v_j)]
///       - sum_j beta_ij sgn(gamma (x_i-x_j) + zeta (v_i-v_j)) + phi_i,
/// beta_ij' = ||gamma (x_i-x_j) + zeta (v_i-v_j)||_1.
inline ControlStep distributed_double_step(const TeamState& s,
                                           const std::vector<DerivativeBundle>& bundles,
                                           const Graph& g, const GainParams& p) {
  const int n = s.agents();
  ControlStep out;
  out.u.resize(n, s.dim());
  for (int i = 0; i < n; ++i) out.u.row(i) = phi_double(bundles[static_cast<size_t>(i)]).transpose();
  out.beta_dot = Eigen::VectorXd::Zero(g.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::VectorXd dx = (s.x.row(i) - s.x.row(j)).transpose();
    const Eigen::VectorXd dv = (s.v.row(i) - s.v.row(j)).transpose();
    const Eigen::VectorXd lin = p.mu * dx + p.alpha * dv;
    const Eigen::VectorXd z = p.gamma * dx + p.zeta * dv;
    const Eigen::VectorXd sg = sig_alpha(z, 0.0);
    out.u.row(i) -= (lin + s.beta(k) * sg).transpose();
    out.u.row(j) += (lin + s.beta(k) * sg).transpose();
    out.beta_dot(k) = z.lpNorm<1>();
  }
  return out;
}

/// Boundary-layer variant of distributed_double_step: sgn replaced by the
/// h(.) field, beta_ij' = z^T h(z) (always nonnegative).
inline ControlStep continuous_double_step(const TeamState& s,
                                          const std::vector<DerivativeBundle>& bundles,
                                          const Graph& g, const GainParams& p) {
  const int n = s.agents();
  ControlStep out;
  out.u.resize(n, s.dim());
  for (int i = 0; i < n; ++i) out.u.row(i) = phi_double(bundles[static_cast<size_t>(i)]).transpose();
  out.beta_dot = Eigen::VectorXd::Zero(g.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::VectorXd dx = (s.x.row(i) - s.x.row(j)).transpose();
    const Eigen::VectorXd dv = (s.v.row(i) - s.v.row(j)).transpose();
    const Eigen::VectorXd lin = p.mu * dx + p.alpha * dv;
    const Eigen::VectorXd z = p.gamma * dx + p.zeta * dv;
    const Eigen::VectorXd h = boundary_layer(z, p.layer, s.t);
    out.u.row(i) -= (lin + s.beta(k) * h).transpose();
    out.u.row(j) += (lin + s.beta(k) * h).transpose();
    out.beta_dot(k) = z.dot(h);
  }
  return out;
}

/// Symmetrize, clamp eigenvalues below the floor, reassemble.
inline Eigen::MatrixXd pd_project(const Eigen::MatrixXd& m, double floor) {
  if (floor <= 0.0) throw std::invalid_argument("pd_project: floor must be positive");
  const Eigen::MatrixXd sym = (m + m.transpose()) / 2.0;
  SymmetricEigen eig = jacobi_eigen(sym);
  bool clamped = false;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    if (eig.values(k) < floor) {
      eig.values(k) = floor;
      clamped = true;
    }
  }
  if (!clamped) return sym;
  return eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
}

/// Average-tracking estimators plus consensus controller (single case):
///   xi_i'  = est_alpha * sum_j sgn(w_j - w_i),      w_i  = xi_i + grad_i
///   psi_i' = est_beta  * sum_j sgn(th_j - th_i),    th_i = psi_i + H_i
///   phi_i' = est_gamma * sum_j sgn(sig_j - sig_i),  sig_i = phi_i + pt_grad_i
///   S_i = -proj(th_i)^{-1} (tau w_i + sig_i)
///   u_i = -sum_j sig(x_i - x_j)^eta + S_i
inline EstimatorSingleStep estimator_single_step(const TeamState& s,
                                                 const std::vector<DerivativeBundle>& bundles,
                                                 const Graph& g, const GainParams& p) {
  if (!s.est_single) throw std::invalid_argument("estimator_single_step: estimator state missing");
  const int n = s.agents();
  const int m = s.dim();
  const EstimatorSingleState& est = *s.est_single;

  Eigen::MatrixXd w(n, m), sig(n, m);
  std::vector<Eigen::MatrixXd> th(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const DerivativeBundle& b = bundles[static_cast<size_t>(i)];
    w.row(i) = est.xi.row(i) + b.grad.transpose();
    th[static_cast<size_t>(i)] = est.psi[static_cast<size_t>(i)] + b.hess;
    sig.row(i) = est.phi.row(i) + b.pt_grad.transpose();
  }

  EstimatorSingleStep out;
  out.xi_dot = Eigen::MatrixXd::Zero(n, m);
  out.phi_dot = Eigen::MatrixXd::Zero(n, m);
  out.psi_dot.assign(static_cast<size_t>(n), Eigen::MatrixXd::Zero(m, m));
  out.u = Eigen::MatrixXd::Zero(n, m);
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::MatrixXd sw = sign_matrix(w.row(j) - w.row(i));
    out.xi_dot.row(i) += p.est_alpha * sw;
    out.xi_dot.row(j) -= p.est_alpha * sw;
    const Eigen::MatrixXd st =
        sign_matrix(th[static_cast<size_t>(j)] - th[static_cast<size_t>(i)]);
    out.psi_dot[static_cast<size_t>(i)] += p.est_beta * st;
    out.psi_dot[static_cast<size_t>(j)] -= p.est_beta * st;
    const Eigen::MatrixXd ss = sign_matrix(sig.row(j) - sig.row(i));
    out.phi_dot.row(i) += p.est_gamma * ss;
    out.phi_dot.row(j) -= p.est_gamma * ss;

    const Eigen::VectorXd dx = (s.x.row(i) - s.x.row(j)).transpose();
    const Eigen::VectorXd coupling = sig_alpha(dx, p.eta);
    out.u.row(i) -= coupling.transpose();
    out.u.row(j) += coupling.transpose();
  }

  out.s.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd th_pd = pd_project(th[static_cast<size_t>(i)], p.pd_floor);
    const Eigen::VectorXd rhs =
        p.tau * w.row(i).transpose() + sig.row(i).transpose();
    out.s.row(i) = (-th_pd.llt().solve(rhs)).transpose();
    out.u.row(i) += out.s.row(i);
  }
  return out;
}

/// Stacked estimators plus consensus controller (double case). w_i tracks the
/// average of (grad, pt_grad, dt_grad, pt_dt_grad), sig_i the average of
/// (H, dH/dt); the internal signal rebuilds the aggregated tracking input:
///   S_i = p1^{-1} s2 p1^{-1} (w1 + w2) - p1^{-1} (w3 + w4) - p1 w1,
/// with p1 the positive-definite projection of the H block.
inline EstimatorDoubleStep estimator_double_step(const TeamState& s,
                                                 const std::vector<DerivativeBundle>& bundles,
                                                 const Graph& g, const GainParams& p) {
  if (!s.est_double) throw std::invalid_argument("estimator_double_step: estimator state missing");
  const int n = s.agents();
  const int m = s.dim();
  const EstimatorDoubleState& est = *s.est_double;

  Eigen::MatrixXd w(n, 4 * m);
  std::vector<Eigen::MatrixXd> sig(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const DerivativeBundle& b = bundles[static_cast<size_t>(i)];
    Eigen::VectorXd stacked(4 * m);
    stacked << b.grad, b.pt_grad, b.dt_grad, b.pt_dt_grad;
    w.row(i) = est.xi.row(i) + stacked.transpose();
    Eigen::MatrixXd th(2 * m, m);
    th << b.hess, b.dt_hess;
    sig[static_cast<size_t>(i)] = est.phi[static_cast<size_t>(i)] + th;
  }

  EstimatorDoubleStep out;
  out.xi_dot = Eigen::MatrixXd::Zero(n, 4 * m);
  out.phi_dot.assign(static_cast<size_t>(n), Eigen::MatrixXd::Zero(2 * m, m));
  out.u = Eigen::MatrixXd::Zero(n, m);
  const double a2 = p.alpha2();
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::MatrixXd sw = sign_matrix(w.row(j) - w.row(i));
    out.xi_dot.row(i) += p.kappa * sw;
    out.xi_dot.row(j) -= p.kappa * sw;
    const Eigen::MatrixXd ss =
        sign_matrix(sig[static_cast<size_t>(j)] - sig[static_cast<size_t>(i)]);
    out.phi_dot[static_cast<size_t>(i)] += p.rho * ss;
    out.phi_dot[static_cast<size_t>(j)] -= p.rho * ss;

    const Eigen::VectorXd dx = (s.x.row(i) - s.x.row(j)).transpose();
    const Eigen::VectorXd dv = (s.v.row(i) - s.v.row(j)).transpose();
    const Eigen::VectorXd coupling = sig_alpha(dx, p.alpha1) + sig_alpha(dv, a2);
    out.u.row(i) -= coupling.transpose();
    out.u.row(j) += coupling.transpose();
  }

  out.s.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd w1 = w.row(i).segment(0, m).transpose();
    const Eigen::VectorXd w2 = w.row(i).segment(m, m).transpose();
    const Eigen::VectorXd w3 = w.row(i).segment(2 * m, m).transpose();
    const Eigen::VectorXd w4 = w.row(i).segment(3 * m, m).transpose();
    const Eigen::MatrixXd s1 = sig[static_cast<size_t>(i)].topRows(m);
    const Eigen::MatrixXd s2 = sig[static_cast<size_t>(i)].bottomRows(m);
    const Eigen::MatrixXd p1 = pd_project(s1, p.pd_floor);
    const Eigen::LLT<Eigen::MatrixXd> llt(p1);
    Eigen::VectorXd si = -llt.solve(w3 + w4) - p1 * w1;
    if (s2.cwiseAbs().maxCoeff() > 0.0)
      si += llt.solve(s2 * llt.solve(w1 + w2));
    out.s.row(i) = si.transpose();
    out.u.row(i) += si.transpose();
  }
  return out;
}

/// Consensus-error weighting matrix of the double-integrator laws:
/// P = [ (alpha*gamma + mu*zeta) (L (x) I_m) - 2 psi gamma I , gamma I
///       gamma I                                             , zeta I ].
inline Eigen::MatrixXd consensus_weight_matrix(const Graph& g, int m, const GainParams& p,
                                               double psi) {
  const int nm = g.n * m;
  const Eigen::MatrixXd l = laplacian(g);
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * nm, 2 * nm);
  const double w = p.alpha * p.gamma + p.mu * p.zeta;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < m; ++k) big(i * m + k, j * m + k) = w * l(i, j);
  big.topLeftCorner(nm, nm) -= 2.0 * psi * p.gamma * Eigen::MatrixXd::Identity(nm, nm);
  big.topRightCorner(nm, nm) = p.gamma * Eigen::MatrixXd::Identity(nm, nm);
  big.bottomLeftCorner(nm, nm) = p.gamma * Eigen::MatrixXd::Identity(nm, nm);
  big.bottomRightCorner(nm, nm) = p.zeta * Eigen::MatrixXd::Identity(nm, nm);
  return big;
}

/// Extremal eigenvalues of P restricted to the subspace where the consensus
/// errors live (per-coordinate agent sums zero in both blocks). On the full
/// space P is indefinite along the all-ones directions, which never carry
/// consensus error.
struct SubspaceEigs {
  double min_eig = 0.0;
  double max_eig = 0.0;
};

inline SubspaceEigs error_subspace_eigs(const Eigen::MatrixXd& p, int n, int m) {
  const Eigen::MatrixXd u = mean_zero_basis(n);  // n x (n-1)
  const int nm = n * m;
  const int r = (n - 1) * m;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2 * nm, 2 * r);
  for (int c = 0; c < n - 1; ++c)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < m; ++k) {
        q(i * m + k, c * m + k) = u(i, c);
        q(nm + i * m + k, r + c * m + k) = u(i, c);
      }
  const Eigen::MatrixXd reduced = q.transpose() * p * q;
  const Eigen::VectorXd evals = symmetric_eigenvalues(reduced);
  return {evals(0), evals(evals.size() - 1)};
}

struct GainCondition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict_less = true;  // lhs < rhs expected (else lhs > rhs)
  bool pass = false;
};

struct GainConditionReport {
  std::vector<GainCondition> conditions;
  double psi = 0.0;        // value used for the boundary-layer conditions
  bool psi_searched = false;
  bool all_pass = true;
};

/// Consensus gain inequalities. Always evaluates gamma/(alpha zeta) < lambda2;
/// with with_layer also the three boundary-layer conditions at psi (searching
/// the largest feasible psi on a grid when none is given).
inline GainConditionReport check_gain_conditions(const GainParams& p, double lam2,
                                                 bool with_layer = false,
                                                 std::optional<double> psi = std::nullopt) {
  GainConditionReport rep;
  const auto add = [&rep](std::string name, double lhs, double rhs, bool strict_less) {
    GainCondition c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.strict_less = strict_less;
    c.pass = strict_less ? (lhs < rhs) : (lhs > rhs);
    rep.all_pass = rep.all_pass && c.pass;
    rep.conditions.push_back(std::move(c));
  };

  const double base = p.gamma / (p.alpha * p.zeta);
  add("gamma/(alpha*zeta) < lambda2", base, lam2, true);
  if (!with_layer) return rep;

  double psi_val;
  if (psi) {
    psi_val = *psi;
  } else {
    // largest grid value satisfying all three strict inequalities
    const double upper =
        std::min({p.mu / (2.0 * p.alpha), p.gamma / (2.0 * p.zeta), (lam2 - base) * p.alpha});
    psi_val = 0.0;
    if (upper > 0.0) {
      const int grid = 1000;
      for (int k = grid - 1; k >= 1; --k) {
        const double cand = upper * static_cast<double>(k) / grid;
        if (base + cand / p.alpha < lam2 && p.mu / (2.0 * p.alpha) > cand &&
            p.gamma / (2.0 * p.zeta) > cand) {
          psi_val = cand;
          break;
        }
      }
    }
    rep.psi_searched = true;
  }
  rep.psi = psi_val;
  add("gamma/(alpha*zeta) + psi/alpha < lambda2", base + psi_val / p.alpha, lam2, true);
  add("mu/(2*alpha) > psi", p.mu / (2.0 * p.alpha), psi_val, false);
  add("gamma/(2*zeta) > psi", p.gamma / (2.0 * p.zeta), psi_val, false);
  if (!psi && psi_val <= 0.0) rep.all_pass = false;
  return rep;
}

/// Steady tracking error bound of the fixed-boundary-layer law:
/// sqrt(phi_bar N (N-1)^2 epsilon / (4 psi lambda_min[P])).
inline double fixed_layer_error_bound(const GainParams& p, int n, int m, double phi_bar,
                                      double psi, const Graph& g) {
  const Eigen::MatrixXd big = consensus_weight_matrix(g, m, p, psi);
  const SubspaceEigs eigs = error_subspace_eigs(big, n, m);
  if (eigs.min_eig <= 0.0)
    throw std::runtime_error(
        "fixed_layer_error_bound: P is not positive definite on the consensus-error "
        "subspace; gain conditions are violated");
  const double num = phi_bar * n * (n - 1.0) * (n - 1.0) * p.layer.epsilon;
  return std::sqrt(num / (4.0 * psi * eigs.min_eig));
}

}  // namespace tvopt
