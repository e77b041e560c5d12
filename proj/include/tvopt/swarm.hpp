#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "tvopt/controllers.hpp"
#include "tvopt/graph.hpp"

namespace tvopt {

/// Pairwise potential description. The per-pair connectivity pattern is
/// frozen from the initial positions: pairs inside the sensing radius at
/// t = 0 get the profile that blows up at R (so they can never separate),
/// all other pairs get the profile that flattens to zero at R.
struct PotentialSpec {
  double radius = 0.0;             // sensing radius R
  double desired = 0.0;            // desired inter-agent distance d < R
  Eigen::MatrixXi initially_connected;  // symmetric 0/1, zero diagonal

  static PotentialSpec from_initial_positions(const Eigen::MatrixXd& x0, double radius,
                                              double desired) {
    if (radius <= 0.0 || desired <= 0.0 || desired >= radius)
      throw std::invalid_argument("potential: need 0 < d < R");
    PotentialSpec spec;
    spec.radius = radius;
    spec.desired = desired;
    const int n = static_cast<int>(x0.rows());
    spec.initially_connected = Eigen::MatrixXi::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if ((x0.row(i) - x0.row(j)).norm() < radius)
          spec.initially_connected(i, j) = spec.initially_connected(j, i) = 1;
    return spec;
  }
};

namespace detail {
constexpr double kCollisionEps = 1e-12;

/// Scalar force profile p(s) = dV/ds.
inline double potential_slope(double s, bool connected, const PotentialSpec& spec) {
  const double r = spec.radius, d = spec.desired;
  if (connected) {
    // unique minimum at d, repulsive blowup at 0, attractive blowup at R
    return (s - d) * (1.0 / (s * s) + 1.0 / ((r - s) * (r - s)));
  }
  if (s >= r) return 0.0;
  return (s - d) / (s * s) * (r - s) / (r - d);
}
}  // namespace detail

/// dV_ij/dx_i = p(s) (x_i - x_j)/s with s = ||x_i - x_j||_2.
/// Collision (s = 0) and, for initially connected pairs, s >= R are outside
/// the domain.
inline Eigen::VectorXd potential_gradient(const Eigen::VectorXd& xi,
                                          const Eigen::VectorXd& xj, bool connected,
                                          const PotentialSpec& spec) {
  const Eigen::VectorXd diff = xi - xj;
  const double s = diff.norm();
  if (s < detail::kCollisionEps)
    throw std::domain_error("potential_gradient: agents collided");
  if (connected && s >= spec.radius)
    throw std::domain_error(
        "potential_gradient: initially connected pair evaluated at or beyond the sensing radius");
  return detail::potential_slope(s, connected, spec) / s * diff;
}

/// V_ij(s), normalized so the minimum value at s = d is zero. Used for
/// energy probes and the conservative velocity-spread bound.
inline double potential_value(double s, bool connected, const PotentialSpec& spec) {
  const double r = spec.radius, d = spec.desired;
  if (s < detail::kCollisionEps)
    throw std::domain_error("potential_value: agents collided");
  if (connected) {
    if (s >= r)
      throw std::domain_error("potential_value: connected pair beyond the sensing radius");
    const auto anti = [&](double u) {
      return std::log(u) + d / u + (r - d) / (r - u) + std::log(r - u);
    };
    return anti(s) - anti(d);
  }
  const auto anti = [&](double u) {
    return (-u + (r + d) * std::log(u) + d * r / u) / (r - d);
  };
  const double capped = std::min(s, r);
  return anti(capped) - anti(d);
}

/// u_i = -beta sgn(sum_j dV_ij/dx_i) + phi_i (single-integrator feedforward).
inline Eigen::MatrixXd swarm_single_step(const TeamState& s,
                                         const std::vector<DerivativeBundle>& bundles,
                                         const Graph& g, const PotentialSpec& spec,
                                         double beta) {
  const int n = s.agents();
  const int m = s.dim();
  Eigen::MatrixXd grad_sum = Eigen::MatrixXd::Zero(n, m);
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::VectorXd dv = potential_gradient(
        s.x.row(i).transpose(), s.x.row(j).transpose(),
        spec.initially_connected(i, j) != 0, spec);
    grad_sum.row(i) += dv.transpose();
    grad_sum.row(j) -= dv.transpose();
  }
  Eigen::MatrixXd u(n, m);
  for (int i = 0; i < n; ++i) {
    u.row(i) = -beta * sig_alpha(grad_sum.row(i).transpose(), 0.0).transpose() +
               phi_single(bundles[static_cast<size_t>(i)]).transpose();
  }
  return u;
}

/// u_i = -sum_j dV_ij/dx_i - alpha sum_j (v_i - v_j)
///       - beta sum_j sgn(v_i - v_j) + phi_i (double-integrator feedforward).
/// The relative-velocity damping matches the error dynamics the consensus
/// argument runs on; alpha = 0 turns it off.
inline Eigen::MatrixXd swarm_double_step(const TeamState& s,
                                         const std::vector<DerivativeBundle>& bundles,
                                         const Graph& g, const PotentialSpec& spec,
                                         double alpha, double beta) {
  const int n = s.agents();
  const int m = s.dim();
  Eigen::MatrixXd u(n, m);
  for (int i = 0; i < n; ++i)
    u.row(i) = phi_double(bundles[static_cast<size_t>(i)]).transpose();
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto [i, j] = g.edges[static_cast<size_t>(k)];
    const Eigen::VectorXd dpot = potential_gradient(
        s.x.row(i).transpose(), s.x.row(j).transpose(),
        spec.initially_connected(i, j) != 0, spec);
    const Eigen::VectorXd dv = (s.v.row(i) - s.v.row(j)).transpose();
    const Eigen::VectorXd coupling = dpot + alpha * dv + beta * sig_alpha(dv, 0.0);
    u.row(i) -= coupling.transpose();
    u.row(j) += coupling.transpose();
  }
  return u;
}

/// Conservative swarm gain selected from the initial state and the signal
/// bounds of the gradient form grad f_i = sigma x_i + g_i(t):
///   beta_x = ||sum x_i(0)||_2 / N + (2/sigma) g_bar + (N-1) R + margin,
/// then a 1-norm bound on phi_i = -x_i - (g_i + g_i')/sigma.
struct SwarmBetaBound {
  double beta_x = 0.0;
  double phi_l1_bound = 0.0;
  double beta = 0.0;
};

inline SwarmBetaBound swarm_beta_bound(const Eigen::MatrixXd& x0, double g_bar,
                                       double gdot_bar, double sigma,
                                       const PotentialSpec& spec,
                                       double gamma_margin = 1.0) {
  if (sigma <= 0.0) throw std::invalid_argument("swarm_beta_bound: sigma must be positive");
  const int n = static_cast<int>(x0.rows());
  const int m = static_cast<int>(x0.cols());
  SwarmBetaBound out;
  out.beta_x = x0.colwise().sum().norm() / n + (2.0 / sigma) * g_bar +
               (n - 1.0) * spec.radius + gamma_margin;
  out.phi_l1_bound = std::sqrt(static_cast<double>(m)) *
                     (out.beta_x + (g_bar + gdot_bar) / sigma);
  out.beta = out.phi_l1_bound + gamma_margin;
  return out;
}

/// A-priori bound on max_{i,j} ||phi_i - phi_j||_2 along a swarm run with the
/// double-integrator feedforward and identical Hessians H:
///   ||phi_i - phi_j|| <= ||H^{-1}|| (D_gddot + D_gdot) + ||v_i - v_j||
///                        + ||H||^2 ||x_i - x_j|| + ||H|| D_g,
/// with ||x_i - x_j|| <= (N-1)R from connectivity maintenance and the
/// velocity spread bounded through the nonincreasing swarm energy
/// W = (1/N) sum_ij V_ij + e_V^T e_V / 2, so ||v_i - v_j|| <= 2 sqrt(2 W(0)).
inline double swarm_phi_spread_bound(double w0, int n, const PotentialSpec& spec,
                                     const Eigen::MatrixXd& hess, double dg,
                                     double dgdot, double dgddot) {
  const Eigen::VectorXd evals = symmetric_eigenvalues(hess);
  const double hmin = evals(0), hmax = evals(evals.size() - 1);
  if (hmin <= 0.0)
    throw std::runtime_error("swarm_phi_spread_bound: Hessian must be positive definite");
  return (dgddot + dgdot) / hmin + 2.0 * std::sqrt(2.0 * w0) +
         hmax * hmax * (n - 1.0) * spec.radius + hmax * dg;
}

/// Swarm energy at a state: (1/N) sum_{i,j} V_ij + ||e_V||^2 / 2 (pairs at or
/// beyond R contribute their flat value only when not initially connected).
inline double swarm_energy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v,
                           const PotentialSpec& spec) {
  const int n = static_cast<int>(x.rows());
  double pot = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      pot += potential_value((x.row(i) - x.row(j)).norm(),
                             spec.initially_connected(i, j) != 0, spec);
    }
  double kin = 0.0;
  if (v.size() > 0) {
    const Eigen::RowVectorXd mean = v.colwise().mean();
    kin = 0.5 * (v.rowwise() - mean).squaredNorm();
  }
  return pot / n + kin;
}

}  // namespace tvopt
