#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvopt {

/// Scalar time signal with exact closed-form first and second derivatives.
struct TimeSignal {
  enum class Kind { Sinusoid, Cosine, DampedRational, Constant };
  Kind kind = Kind::Constant;
  double amp = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  double offset = 0.0;  // also the value for Constant

  double value(double t) const {
    switch (kind) {
      case Kind::Sinusoid: return amp * std::sin(omega * t + phase) + offset;
      case Kind::Cosine: return amp * std::cos(omega * t + phase) + offset;
      case Kind::DampedRational: return amp * std::sin(omega * t) / (t + 1.0);
      case Kind::Constant: return offset;
    }
    return 0.0;
  }

  double d1(double t) const {
    switch (kind) {
      case Kind::Sinusoid: return amp * omega * std::cos(omega * t + phase);
      case Kind::Cosine: return -amp * omega * std::sin(omega * t + phase);
      case Kind::DampedRational: {
        const double p = t + 1.0;
        return amp * (omega * std::cos(omega * t) / p - std::sin(omega * t) / (p * p));
      }
      case Kind::Constant: return 0.0;
    }
    return 0.0;
  }

  double d2(double t) const {
    switch (kind) {
      case Kind::Sinusoid: return -amp * omega * omega * std::sin(omega * t + phase);
      case Kind::Cosine: return -amp * omega * omega * std::cos(omega * t + phase);
      case Kind::DampedRational: {
        const double p = t + 1.0;
        return amp * (-omega * omega * std::sin(omega * t) / p -
                      2.0 * omega * std::cos(omega * t) / (p * p) +
                      2.0 * std::sin(omega * t) / (p * p * p));
      }
      case Kind::Constant: return 0.0;
    }
    return 0.0;
  }

  static TimeSignal sinusoid(double amp, double omega, double phase = 0.0,
                             double offset = 0.0) {
    return {Kind::Sinusoid, amp, omega, phase, offset};
  }
  static TimeSignal cosine(double amp, double omega, double phase = 0.0,
                           double offset = 0.0) {
    return {Kind::Cosine, amp, omega, phase, offset};
  }
  static TimeSignal damped(double amp, double omega) {
    return {Kind::DampedRational, amp, omega, 0.0, 0.0};
  }
  static TimeSignal constant(double value) {
    return {Kind::Constant, 0.0, 0.0, 0.0, value};
  }
};

/// One agent's cost f(x, t) = ||A x + g(t)||_2^2 with closed-form g.
/// The Hessian 2 A^T A is constant, so the whole derivative bundle is exact.
struct CostModel {
  Eigen::MatrixXd a;              // m x m
  std::vector<TimeSignal> g;      // m entries

  int dim() const { return static_cast<int>(a.rows()); }

  Eigen::VectorXd g_value(double t) const {
    Eigen::VectorXd v(g.size());
    for (size_t k = 0; k < g.size(); ++k) v(static_cast<Eigen::Index>(k)) = g[k].value(t);
    return v;
  }
  Eigen::VectorXd g_d1(double t) const {
    Eigen::VectorXd v(g.size());
    for (size_t k = 0; k < g.size(); ++k) v(static_cast<Eigen::Index>(k)) = g[k].d1(t);
    return v;
  }
  Eigen::VectorXd g_d2(double t) const {
    Eigen::VectorXd v(g.size());
    for (size_t k = 0; k < g.size(); ++k) v(static_cast<Eigen::Index>(k)) = g[k].d2(t);
    return v;
  }
};

/// Everything a control law may need from one cost at one state and time.
/// dt_grad is the total derivative along a trajectory with velocity v, so
/// dt_grad = hess * v + pt_grad holds exactly.
struct DerivativeBundle {
  double f = 0.0;
  Eigen::VectorXd grad;        // gradient in x
  Eigen::MatrixXd hess;        // constant 2 A^T A
  Eigen::VectorXd pt_grad;     // partial_t of the gradient
  Eigen::VectorXd dt_grad;     // d/dt of the gradient along (x(t), t)
  Eigen::VectorXd pt_dt_grad;  // partial_t of dt_grad at fixed (x, v)
  Eigen::MatrixXd dt_hess;     // zero for this family
};

inline DerivativeBundle derivatives(const CostModel& c, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& v, double t) {
  DerivativeBundle b;
  const Eigen::VectorXd r = c.a * x + c.g_value(t);
  b.f = r.squaredNorm();
  b.grad = 2.0 * c.a.transpose() * r;
  b.hess = 2.0 * c.a.transpose() * c.a;
  b.pt_grad = 2.0 * c.a.transpose() * c.g_d1(t);
  b.dt_grad = b.hess * v + b.pt_grad;
  b.pt_dt_grad = 2.0 * c.a.transpose() * c.g_d2(t);
  b.dt_hess = Eigen::MatrixXd::Zero(c.dim(), c.dim());
  return b;
}

/// Team bundle: the bundles of all costs added up at one shared state.
inline DerivativeBundle aggregate_bundle(const std::vector<CostModel>& costs,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& v, double t) {
  if (costs.empty()) throw std::invalid_argument("aggregate_bundle: no costs");
  DerivativeBundle acc = derivatives(costs[0], x, v, t);
  for (size_t i = 1; i < costs.size(); ++i) {
    const DerivativeBundle b = derivatives(costs[i], x, v, t);
    acc.f += b.f;
    acc.grad += b.grad;
    acc.hess += b.hess;
    acc.pt_grad += b.pt_grad;
    acc.dt_grad += b.dt_grad;
    acc.pt_dt_grad += b.pt_dt_grad;
    acc.dt_hess += b.dt_hess;
  }
  return acc;
}

/// Minimizer of the team cost and its velocity:
/// x*(t) = -(sum A_i^T A_i)^{-1} sum A_i^T g_i(t), exact in t.
struct TeamOptimum {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
};

inline TeamOptimum team_optimum(const std::vector<CostModel>& costs, double t) {
  if (costs.empty()) throw std::invalid_argument("team_optimum: no costs");
  const int m = costs[0].dim();
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd atg = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd atgd = Eigen::VectorXd::Zero(m);
  for (const CostModel& c : costs) {
    ata += c.a.transpose() * c.a;
    atg += c.a.transpose() * c.g_value(t);
    atgd += c.a.transpose() * c.g_d1(t);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "team_optimum: summed Hessian is singular; an invertible total Hessian is required");
  TeamOptimum opt;
  opt.x = -lu.solve(atg);
  opt.v = -lu.solve(atgd);
  return opt;
}

/// Central finite differences against the analytic bundle; returns the worst
/// relative discrepancy over all checked quantities. This is the independent
/// oracle for the closed-form derivatives.
inline double fd_check(const CostModel& c, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& v, double t, double h) {
  if (h <= 0.0) throw std::invalid_argument("fd_check: step must be positive");
  const DerivativeBundle b = derivatives(c, x, v, t);
  const int m = c.dim();
  const auto f_at = [&](const Eigen::VectorXd& xx, double tt) {
    return (c.a * xx + c.g_value(tt)).squaredNorm();
  };
  const auto grad_at = [&](const Eigen::VectorXd& xx, double tt) {
    return Eigen::VectorXd(2.0 * c.a.transpose() * (c.a * xx + c.g_value(tt)));
  };
  const auto rel = [](double diff, double ref) {
    return diff / std::max(1.0, std::abs(ref));
  };

  double worst = 0.0;
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const double fd_grad = (f_at(xp, t) - f_at(xm, t)) / (2.0 * h);
    worst = std::max(worst, rel(std::abs(fd_grad - b.grad(k)), b.grad(k)));
    const Eigen::VectorXd fd_hess_col = (grad_at(xp, t) - grad_at(xm, t)) / (2.0 * h);
    worst = std::max(worst, (fd_hess_col - b.hess.col(k)).cwiseAbs().maxCoeff() /
                                std::max(1.0, b.hess.col(k).cwiseAbs().maxCoeff()));
  }
  const Eigen::VectorXd fd_pt = (grad_at(x, t + h) - grad_at(x, t - h)) / (2.0 * h);
  worst = std::max(worst, (fd_pt - b.pt_grad).cwiseAbs().maxCoeff() /
                              std::max(1.0, b.pt_grad.cwiseAbs().maxCoeff()));
  // total derivative along x(t + s) = x + s v
  const Eigen::VectorXd fd_dt =
      (grad_at(x + h * v, t + h) - grad_at(x - h * v, t - h)) / (2.0 * h);
  worst = std::max(worst, (fd_dt - b.dt_grad).cwiseAbs().maxCoeff() /
                              std::max(1.0, b.dt_grad.cwiseAbs().maxCoeff()));
  // partial_t of dt_grad at fixed (x, v): only the g term moves
  const auto dtgrad_at = [&](double tt) {
    return Eigen::VectorXd(b.hess * v + 2.0 * c.a.transpose() * c.g_d1(tt));
  };
  const Eigen::VectorXd fd_ptdt = (dtgrad_at(t + h) - dtgrad_at(t - h)) / (2.0 * h);
  worst = std::max(worst, (fd_ptdt - b.pt_dt_grad).cwiseAbs().maxCoeff() /
                              std::max(1.0, b.pt_dt_grad.cwiseAbs().maxCoeff()));
  return worst;
}

}  // namespace tvopt
