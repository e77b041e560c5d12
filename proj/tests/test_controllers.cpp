#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "families.hpp"
#include "tvopt/controllers.hpp"
#include "tvopt/costs.hpp"
#include "tvopt/graph.hpp"

using namespace tvopt;

namespace {

std::vector<DerivativeBundle> bundles_at(const std::vector<CostModel>& costs,
                                         const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& v, double t) {
  std::vector<DerivativeBundle> out;
  for (size_t i = 0; i < costs.size(); ++i) {
    const Eigen::VectorXd vi =
        v.size() > 0 ? Eigen::VectorXd(v.row(static_cast<Eigen::Index>(i)).transpose())
                     : Eigen::VectorXd(Eigen::VectorXd::Zero(x.cols()));
    out.push_back(derivatives(costs[i], x.row(static_cast<Eigen::Index>(i)).transpose(),
                              vi, t));
  }
  return out;
}

CostModel scalar_tracking_cost() {
  // f(x, t) = (x - sin t)^2
  CostModel c;
  c.a = Eigen::MatrixXd::Identity(1, 1);
  c.g = {TimeSignal::sinusoid(-1.0, 1.0)};
  return c;
}

}  // namespace

TEST_CASE("phi_single recovers the minimizer velocity") {
  const std::vector<CostModel> fam1 = testutil::family("fig1");
  SECTION("at the moving minimizer phi equals its velocity") {
    const CostModel& c = fam1[1];  // tracks c(t) = 2 (sin t, cos t)
    const double t = 0.7;
    const Eigen::VectorXd x = -c.g_value(t);
    const DerivativeBundle b = derivatives(c, x, Eigen::VectorXd::Zero(2), t);
    const Eigen::VectorXd phi = phi_single(b);
    REQUIRE(phi(0) == Catch::Approx(2.0 * std::cos(t)).margin(1e-12));
    REQUIRE(phi(1) == Catch::Approx(-2.0 * std::sin(t)).margin(1e-12));
  }
  SECTION("agent 1 at x = (0, 1), t = 0") {
    Eigen::VectorXd x(2);
    x << 0.0, 1.0;
    const DerivativeBundle b = derivatives(fam1[0], x, Eigen::VectorXd::Zero(2), 0.0);
    const Eigen::VectorXd phi = phi_single(b);
    REQUIRE(phi(0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(phi(1) == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("time-invariant cost at its minimizer") {
    CostModel c;
    c.a = Eigen::MatrixXd::Identity(2, 2);
    c.g = {TimeSignal::constant(1.0), TimeSignal::constant(-2.0)};
    Eigen::VectorXd x(2);
    x << -1.0, 2.0;
    const DerivativeBundle b = derivatives(c, x, Eigen::VectorXd::Zero(2), 3.0);
    REQUIRE(phi_single(b).cwiseAbs().maxCoeff() < 1e-13);
  }
  SECTION("singular hessian rejected") {
    CostModel c;
    c.a = Eigen::MatrixXd::Zero(2, 2);
    c.g = {TimeSignal::constant(0.0), TimeSignal::constant(0.0)};
    const DerivativeBundle b =
        derivatives(c, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), 0.0);
    REQUIRE_THROWS_AS(phi_single(b), std::runtime_error);
  }
}

TEST_CASE("centralized single-integrator law") {
  const CostModel c = scalar_tracking_cost();
  SECTION("at the origin the law matches the minimizer velocity") {
    const DerivativeBundle b =
        derivatives(c, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 0.0);
    REQUIRE(centralized_single(b, 1.0)(0) == Catch::Approx(1.0));
  }
  SECTION("time-invariant cost at the minimizer gives zero input") {
    CostModel tc;
    tc.a = Eigen::MatrixXd::Identity(1, 1);
    tc.g = {TimeSignal::constant(-2.0)};
    Eigen::VectorXd x(1);
    x << 2.0;
    const DerivativeBundle b = derivatives(tc, x, Eigen::VectorXd::Zero(1), 0.0);
    REQUIRE(centralized_single(b, 3.0).cwiseAbs().maxCoeff() < 1e-13);
  }
  SECTION("closed loop contracts the gradient at rate tau") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(1);
      x << dist(gen);
      const double t = std::abs(dist(gen));
      const double tau = std::abs(dist(gen)) + 0.1;
      const DerivativeBundle b = derivatives(c, x, Eigen::VectorXd::Zero(1), t);
      const Eigen::VectorXd u = centralized_single(b, tau);
      // d/dt grad along the loop: H u + pt_grad = -tau grad
      REQUIRE((b.hess * u + b.pt_grad + tau * b.grad).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("distributed single-integrator law") {
  const std::vector<CostModel> fam1 = testutil::family("fig1");
  const std::vector<CostModel> two = {fam1[0], fam1[1]};
  const Graph g = make_path(2);

  SECTION("identical positions leave only the feedforward") {
    TeamState s;
    s.x = Eigen::MatrixXd::Ones(2, 2);
    s.beta = Eigen::VectorXd::Constant(1, 1.5);
    const auto b = bundles_at(two, s.x, {}, 0.4);
    const ControlStep cs = distributed_single_step(s, b, g);
    REQUIRE((cs.u.row(0).transpose() - phi_single(b[0])).cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE((cs.u.row(1).transpose() - phi_single(b[1])).cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE(cs.beta_dot(0) == 0.0);
  }
  SECTION("componentwise signum coupling and 1-norm adaptation") {
    TeamState s;
    s.x.resize(2, 2);
    s.x << 1.0, 2.0, 0.0, 0.0;
    s.beta = Eigen::VectorXd::Ones(1);
    const auto b = bundles_at(two, s.x, {}, 0.0);
    const ControlStep cs = distributed_single_step(s, b, g);
    const Eigen::VectorXd expected0 =
        phi_single(b[0]) - Eigen::VectorXd::Ones(2);
    REQUIRE((cs.u.row(0).transpose() - expected0).cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE(cs.beta_dot(0) == Catch::Approx(3.0));
    // coupling is skew under label swap
    const Eigen::VectorXd coupling0 = cs.u.row(0).transpose() - phi_single(b[0]);
    const Eigen::VectorXd coupling1 = cs.u.row(1).transpose() - phi_single(b[1]);
    REQUIRE((coupling0 + coupling1).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("estimator-based single-integrator law") {
  const std::vector<CostModel> fam1 = testutil::family("fig1");
  const std::vector<CostModel> two = {fam1[0], fam1[1]};
  const Graph g = make_path(2);
  const int m = 2;

  SECTION("estimator at consensus stops moving") {
    TeamState s;
    s.x = Eigen::MatrixXd::Zero(2, m);
    EstimatorSingleState est;
    est.xi.resize(2, m);
    const auto b = bundles_at(two, s.x, {}, 0.3);
    // choose xi so both w_i agree
    est.xi.row(0) = -b[0].grad.transpose();
    est.xi.row(1) = -b[1].grad.transpose();
    est.psi.assign(2, Eigen::MatrixXd::Zero(m, m));
    est.phi = Eigen::MatrixXd::Zero(2, m);
    est.phi.row(0) = -b[0].pt_grad.transpose();
    est.phi.row(1) = -b[1].pt_grad.transpose();
    s.est_single = est;
    GainParams p;
    const EstimatorSingleStep es = estimator_single_step(s, b, g, p);
    REQUIRE(es.xi_dot.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(es.phi_dot.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("internal signal arithmetic") {
    // theta = 2 I, tau = 1, w = (2, 0), sigma-signal = 0 gives S = (-1, 0)
    TeamState s;
    s.x = Eigen::MatrixXd::Zero(2, m);
    const auto b = bundles_at(two, s.x, {}, 0.0);
    EstimatorSingleState est;
    est.xi.resize(2, m);
    Eigen::VectorXd target(2);
    target << 2.0, 0.0;
    for (int i = 0; i < 2; ++i)
      est.xi.row(i) = (target - b[static_cast<size_t>(i)].grad).transpose();
    est.psi.assign(2, Eigen::MatrixXd::Zero(m, m));  // theta = psi + H = 2I (H = 2I here)
    est.phi.resize(2, m);
    for (int i = 0; i < 2; ++i)
      est.phi.row(i) = -b[static_cast<size_t>(i)].pt_grad.transpose();
    s.est_single = est;
    GainParams p;
    p.tau = 1.0;
    const EstimatorSingleStep es = estimator_single_step(s, b, g, p);
    REQUIRE(es.s(0, 0) == Catch::Approx(-1.0));
    REQUIRE(es.s(0, 1) == Catch::Approx(0.0).margin(1e-13));
  }

  SECTION("antisymmetric estimator coupling preserves the sum") {
    // grads (1,0) and (3,0) via constant offsets at x = 0
    CostModel c1, c2;
    c1.a = c2.a = Eigen::MatrixXd::Identity(2, 2);
    c1.g = {TimeSignal::constant(0.5), TimeSignal::constant(0.0)};
    c2.g = {TimeSignal::constant(1.5), TimeSignal::constant(0.0)};
    TeamState s;
    s.x = Eigen::MatrixXd::Zero(2, 2);
    EstimatorSingleState est;
    est.xi = Eigen::MatrixXd::Zero(2, 2);
    est.psi.assign(2, Eigen::MatrixXd::Zero(2, 2));
    est.phi = Eigen::MatrixXd::Zero(2, 2);
    s.est_single = est;
    GainParams p;
    p.est_alpha = 2.5;
    const auto b = bundles_at({c1, c2}, s.x, {}, 0.0);
    REQUIRE(b[0].grad(0) == Catch::Approx(1.0));
    REQUIRE(b[1].grad(0) == Catch::Approx(3.0));
    const EstimatorSingleStep es = estimator_single_step(s, b, g, p);
    REQUIRE(es.xi_dot(0, 0) == Catch::Approx(2.5));
    REQUIRE(es.xi_dot(1, 0) == Catch::Approx(-2.5));
    REQUIRE((es.xi_dot.row(0) + es.xi_dot.row(1)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("phi_double matches the scalar-hessian reduction") {
  const std::vector<CostModel> fam1 = testutil::family("fig1");
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const CostModel& c = fam1[static_cast<size_t>(gen() % fam1.size())];
    Eigen::VectorXd x(2), v(2);
    for (int k = 0; k < 2; ++k) {
      x(k) = dist(gen);
      v(k) = dist(gen);
    }
    const double t = std::abs(dist(gen));
    const DerivativeBundle b = derivatives(c, x, v, t);
    const double sigma = 2.0;  // identity A
    const Eigen::VectorXd ghat = 2.0 * c.g_value(t);
    const Eigen::VectorXd ghat_dot = 2.0 * c.g_d1(t);
    const Eigen::VectorXd ghat_ddot = 2.0 * c.g_d2(t);
    const Eigen::VectorXd expect = -(ghat_ddot + sigma * v + ghat_dot) / sigma -
                                   sigma * (sigma * x + ghat);
    REQUIRE((phi_double(b) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("time-invariant cost at rest on the minimizer") {
    CostModel c;
    c.a = Eigen::MatrixXd::Identity(2, 2);
    c.g = {TimeSignal::constant(0.5), TimeSignal::constant(0.5)};
    Eigen::VectorXd x(2);
    x << -0.5, -0.5;
    const DerivativeBundle b = derivatives(c, x, Eigen::VectorXd::Zero(2), 1.0);
    REQUIRE(phi_double(b).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("centralized double-integrator law at rest on a constant minimizer") {
  CostModel c;
  c.a = Eigen::MatrixXd::Identity(2, 2);
  c.g = {TimeSignal::constant(1.0), TimeSignal::constant(0.0)};
  Eigen::VectorXd x(2);
  x << -1.0, 0.0;
  const DerivativeBundle b = derivatives(c, x, Eigen::VectorXd::Zero(2), 0.0);
  REQUIRE(centralized_double(b).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("distributed double-integrator law") {
  const std::vector<CostModel> fam1 = testutil::family("fig1");
  SECTION("scalar two-agent example") {
    CostModel c;
    c.a = Eigen::MatrixXd::Identity(1, 1);
    c.g = {TimeSignal::constant(0.0)};
    TeamState s;
    s.x.resize(2, 1);
    s.x << 1.0, 0.0;
    s.v = Eigen::MatrixXd::Zero(2, 1);
    s.beta = Eigen::VectorXd::Ones(1);
    GainParams p;
    p.mu = p.gamma = 1.0;
    p.alpha = p.zeta = 1.0;
    const auto b = bundles_at({c, c}, s.x, s.v, 0.0);
    const ControlStep cs = distributed_double_step(s, b, make_path(2), p);
    REQUIRE(cs.u(0, 0) == Catch::Approx(phi_double(b[0])(0) - 2.0));
    REQUIRE(cs.beta_dot(0) == Catch::Approx(1.0));
  }
  SECTION("consensus leaves the feedforward, couplings cancel in the sum") {
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const Graph ring = make_ring(6);
    GainParams p;
    p.mu = 5.0;
    p.alpha = 12.0;
    p.gamma = 5.0;
    p.zeta = 12.0;
    TeamState s;
    s.x.resize(6, 2);
    s.v.resize(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int k = 0; k < 2; ++k) {
        s.x(i, k) = dist(gen);
        s.v(i, k) = dist(gen);
      }
    s.beta = Eigen::VectorXd::Constant(6, 0.7);
    const auto b = bundles_at(fam1, s.x, s.v, 1.1);
    const ControlStep cs = distributed_double_step(s, b, ring, p);
    Eigen::VectorXd coupling_sum = Eigen::VectorXd::Zero(2);
    for (int i = 0; i < 6; ++i)
      coupling_sum += cs.u.row(i).transpose() - phi_double(b[static_cast<size_t>(i)]);
    REQUIRE(coupling_sum.cwiseAbs().maxCoeff() < 1e-12);

    TeamState consensus = s;
    consensus.x.rowwise() = s.x.row(0);
    consensus.v.rowwise() = s.v.row(0);
    const auto bc = bundles_at(fam1, consensus.x, consensus.v, 1.1);
    const ControlStep cc = distributed_double_step(consensus, bc, ring, p);
    for (int i = 0; i < 6; ++i)
      REQUIRE((cc.u.row(i).transpose() - phi_double(bc[static_cast<size_t>(i)]))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    REQUIRE(cc.beta_dot.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("boundary-layer law") {
  CostModel c;
  c.a = Eigen::MatrixXd::Identity(2, 2);
  c.g = {TimeSignal::constant(0.0), TimeSignal::constant(0.0)};
  const Graph g = make_path(2);

  SECTION("layer coupling magnitude and gain slope") {
    TeamState s;
    s.x.resize(2, 2);
    s.x << 3.0, 4.0, 0.0, 0.0;
    s.v = Eigen::MatrixXd::Zero(2, 2);
    s.beta = Eigen::VectorXd::Ones(1);
    GainParams p;
    p.mu = 0.0;
    p.alpha = 0.0;
    p.gamma = 1.0;
    p.zeta = 1.0;
    p.layer = {5.0, 0.0};
    const auto b = bundles_at({c, c}, s.x, s.v, 0.0);
    const ControlStep cs = continuous_double_step(s, b, g, p);
    REQUIRE(cs.beta_dot(0) == Catch::Approx(2.5));
    const Eigen::VectorXd coupling = cs.u.row(0).transpose() - phi_double(b[0]);
    REQUIRE(coupling(0) == Catch::Approx(-0.3));
    REQUIRE(coupling(1) == Catch::Approx(-0.4));
  }
  SECTION("scalar case recovers the signum law as the layer vanishes") {
    CostModel c1;
    c1.a = Eigen::MatrixXd::Identity(1, 1);
    c1.g = {TimeSignal::constant(0.0)};
    TeamState s;
    s.x.resize(2, 1);
    s.x << 0.8, -0.4;
    s.v.resize(2, 1);
    s.v << 0.1, 0.3;
    s.beta = Eigen::VectorXd::Constant(1, 2.0);
    GainParams p;
    p.mu = 1.5;
    p.alpha = 0.7;
    p.gamma = 2.0;
    p.zeta = 1.0;
    p.layer = {0.0, 0.0};
    const auto b = bundles_at({c1, c1}, s.x, s.v, 0.0);
    const ControlStep smooth = continuous_double_step(s, b, make_path(2), p);
    const ControlStep sharp = distributed_double_step(s, b, make_path(2), p);
    REQUIRE((smooth.u - sharp.u).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(smooth.beta_dot(0) == Catch::Approx(sharp.beta_dot(0)));
  }
  SECTION("consensus state leaves the feedforward") {
    TeamState s;
    s.x = Eigen::MatrixXd::Constant(2, 2, 0.3);
    s.v = Eigen::MatrixXd::Constant(2, 2, -0.1);
    s.beta = Eigen::VectorXd::Ones(1);
    GainParams p;
    p.layer = {2.0, 0.0};
    const auto b = bundles_at({c, c}, s.x, s.v, 0.0);
    const ControlStep cs = continuous_double_step(s, b, g, p);
    for (int i = 0; i < 2; ++i)
      REQUIRE((cs.u.row(i).transpose() - phi_double(b[static_cast<size_t>(i)]))
                  .cwiseAbs()
                  .maxCoeff() < 1e-13);
  }
}

TEST_CASE("estimator-based double-integrator law") {
  const std::vector<CostModel> fam2 = testutil::family("fig3");
  const Graph ring = make_ring(6);
  const int m = 2;

  SECTION("internal signal with the hessian block alone") {
    TeamState s;
    s.x = Eigen::MatrixXd::Zero(2, m);
    s.v = Eigen::MatrixXd::Zero(2, m);
    const std::vector<CostModel> two = {fam2[0], fam2[1]};
    const auto b = bundles_at(two, s.x, s.v, 0.0);
    EstimatorDoubleState est;
    est.xi.resize(2, 4 * m);
    Eigen::VectorXd w_target = Eigen::VectorXd::Zero(4 * m);
    w_target(0) = 2.0;  // w1 = (2, 0), other blocks zero
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd stacked(4 * m);
      stacked << b[static_cast<size_t>(i)].grad, b[static_cast<size_t>(i)].pt_grad,
          b[static_cast<size_t>(i)].dt_grad, b[static_cast<size_t>(i)].pt_dt_grad;
      est.xi.row(i) = (w_target - stacked).transpose();
    }
    est.phi.assign(2, Eigen::MatrixXd::Zero(2 * m, m));
    for (int i = 0; i < 2; ++i) {
      // sigma1 = 2 I, sigma2 = 0
      est.phi[static_cast<size_t>(i)].topRows(m) =
          2.0 * Eigen::MatrixXd::Identity(m, m) - b[static_cast<size_t>(i)].hess;
    }
    s.est_double = est;
    GainParams p;
    const EstimatorDoubleStep es = estimator_double_step(s, b, make_path(2), p);
    REQUIRE(es.s(0, 0) == Catch::Approx(-4.0));
    REQUIRE(es.s(0, 1) == Catch::Approx(0.0).margin(1e-13));
  }

  SECTION("locked estimator on the optimal manifold reproduces the manifold acceleration") {
    const double t = 1.3;
    const TeamOptimum opt = team_optimum(fam2, t);
    TeamState s;
    s.x.resize(6, m);
    s.v.resize(6, m);
    for (int i = 0; i < 6; ++i) {
      s.x.row(i) = opt.x.transpose();
      s.v.row(i) = opt.v.transpose();
    }
    const auto b = bundles_at(fam2, s.x, s.v, t);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(4 * m);
    Eigen::MatrixXd avg_th = Eigen::MatrixXd::Zero(2 * m, m);
    std::vector<Eigen::VectorXd> stacked(6);
    std::vector<Eigen::MatrixXd> theta(6);
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd sv(4 * m);
      sv << b[static_cast<size_t>(i)].grad, b[static_cast<size_t>(i)].pt_grad,
          b[static_cast<size_t>(i)].dt_grad, b[static_cast<size_t>(i)].pt_dt_grad;
      stacked[static_cast<size_t>(i)] = sv;
      Eigen::MatrixXd th(2 * m, m);
      th << b[static_cast<size_t>(i)].hess, b[static_cast<size_t>(i)].dt_hess;
      theta[static_cast<size_t>(i)] = th;
      avg += sv;
      avg_th += th;
    }
    avg /= 6.0;
    avg_th /= 6.0;
    EstimatorDoubleState est;
    est.xi.resize(6, 4 * m);
    est.phi.assign(6, Eigen::MatrixXd::Zero(2 * m, m));
    for (int i = 0; i < 6; ++i) {
      est.xi.row(i) = (avg - stacked[static_cast<size_t>(i)]).transpose();
      est.phi[static_cast<size_t>(i)] = avg_th - theta[static_cast<size_t>(i)];
    }
    s.est_double = est;
    GainParams p;
    const EstimatorDoubleStep es = estimator_double_step(s, b, ring, p);
    // v*(t) differentiated by central differences
    const double h = 1e-6;
    const Eigen::VectorXd vdot =
        (team_optimum(fam2, t + h).v - team_optimum(fam2, t - h).v) / (2.0 * h);
    for (int i = 0; i < 6; ++i) {
      REQUIRE((es.s.row(i).transpose() - vdot).cwiseAbs().maxCoeff() < 1e-5);
      // consensus couplings vanish, so u = S
      REQUIRE((es.u.row(i) - es.s.row(i)).cwiseAbs().maxCoeff() < 1e-13);
    }
  }

  SECTION("velocity exponent is tied to the position exponent") {
    GainParams p;
    p.alpha1 = 0.1;
    REQUIRE(p.alpha2() == Catch::Approx(0.2 / 1.1));
  }
}

TEST_CASE("positive-definite projection") {
  SECTION("spd input is returned unchanged") {
    Eigen::MatrixXd m(2, 2);
    m << 3.0, 0.5, 0.5, 2.0;
    REQUIRE((pd_project(m, 0.1) - m).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("zero matrix becomes the floor") {
    const Eigen::MatrixXd p = pd_project(Eigen::MatrixXd::Zero(3, 3), 0.1);
    REQUIRE((p - 0.1 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("negative eigenvalue clamped") {
    Eigen::MatrixXd m = Eigen::Vector2d(5.0, -1.0).asDiagonal();
    const Eigen::MatrixXd p = pd_project(m, 0.1);
    REQUIRE(p(0, 0) == Catch::Approx(5.0));
    REQUIRE(p(1, 1) == Catch::Approx(0.1));
  }
  SECTION("floor must be positive") {
    REQUIRE_THROWS_AS(pd_project(Eigen::MatrixXd::Zero(2, 2), 0.0),
                      std::invalid_argument);
  }
}

TEST_CASE("gain condition checks") {
  SECTION("reference double-integrator gain set passes") {
    GainParams p;
    p.mu = 5.0;
    p.alpha = 12.0;
    p.gamma = 5.0;
    p.zeta = 12.0;
    const GainConditionReport rep = check_gain_conditions(p, 1.0);
    REQUIRE(rep.all_pass);
    REQUIRE(rep.conditions[0].lhs == Catch::Approx(5.0 / 144.0));
  }
  SECTION("violated base condition") {
    GainParams p;
    p.alpha = p.zeta = 1.0;
    p.gamma = 2.0;
    const GainConditionReport rep = check_gain_conditions(p, 1.0);
    REQUIRE_FALSE(rep.all_pass);
  }
  SECTION("grid search finds the largest feasible psi") {
    GainParams p;
    p.mu = 5.0;
    p.alpha = 10.0;
    p.gamma = 5.0;
    p.zeta = 5.0;
    const GainConditionReport rep = check_gain_conditions(p, 1.0, true);
    REQUIRE(rep.all_pass);
    REQUIRE(rep.psi_searched);
    REQUIRE(rep.psi > 0.24);
    REQUIRE(rep.psi < 0.25);
  }
}

TEST_CASE("fixed-layer tracking error bound") {
  GainParams p;
  p.mu = 5.0;
  p.alpha = 10.0;
  p.gamma = 5.0;
  p.zeta = 5.0;
  const Graph ring = make_ring(6);
  const double psi = 0.2;
  SECTION("zero layer means zero bound") {
    p.layer.epsilon = 0.0;
    REQUIRE(fixed_layer_error_bound(p, 6, 2, 10.0, psi, ring) == 0.0);
  }
  SECTION("bound scales with the square root of the layer") {
    p.layer.epsilon = 2.0;
    const double b1 = fixed_layer_error_bound(p, 6, 2, 10.0, psi, ring);
    p.layer.epsilon = 8.0;
    const double b2 = fixed_layer_error_bound(p, 6, 2, 10.0, psi, ring);
    REQUIRE(b2 == Catch::Approx(2.0 * b1));
    REQUIRE(b1 > 0.0);
  }
  SECTION("violated conditions are rejected") {
    GainParams bad;
    bad.mu = 0.01;
    bad.alpha = 0.01;
    bad.gamma = 5.0;
    bad.zeta = 0.01;
    bad.layer.epsilon = 1.0;
    REQUIRE_THROWS_AS(fixed_layer_error_bound(bad, 6, 2, 10.0, 0.5, ring),
                      std::runtime_error);
  }
}

TEST_CASE("distributed laws are permutation equivariant") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  const int n = 5, m = 2;
  std::vector<CostModel> costs;
  for (int i = 0; i < n; ++i) {
    CostModel c;
    c.a = Eigen::MatrixXd::Identity(m, m);
    c.g = {TimeSignal::sinusoid(dist(gen), 1.0), TimeSignal::cosine(dist(gen), 1.0)};
    costs.push_back(std::move(c));
  }
  const Graph g = graph_from_edges(n, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}});
  TeamState s;
  s.x.resize(n, m);
  s.v.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k) {
      s.x(i, k) = dist(gen);
      s.v(i, k) = dist(gen);
    }
  s.beta.resize(g.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) s.beta(k) = std::abs(dist(gen));
  const double t = 0.9;
  s.t = t;

  const std::vector<int> perm = {3, 0, 4, 1, 2};  // new index of each old node
  std::vector<std::pair<int, int>> mapped_edges;
  for (auto [i, j] : g.edges)
    mapped_edges.emplace_back(std::min(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]),
                              std::max(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]));
  const Graph gp = graph_from_edges(n, mapped_edges);

  TeamState sp = s;
  std::vector<CostModel> costs_p(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    sp.x.row(perm[static_cast<size_t>(i)]) = s.x.row(i);
    sp.v.row(perm[static_cast<size_t>(i)]) = s.v.row(i);
    costs_p[static_cast<size_t>(perm[static_cast<size_t>(i)])] = costs[static_cast<size_t>(i)];
  }
  sp.beta.resize(gp.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) {
    const auto target = mapped_edges[static_cast<size_t>(k)];
    for (int kk = 0; kk < gp.edge_count(); ++kk)
      if (gp.edges[static_cast<size_t>(kk)] == target) sp.beta(kk) = s.beta(k);
  }

  const auto b = bundles_at(costs, s.x, s.v, t);
  const auto bp = bundles_at(costs_p, sp.x, sp.v, t);

  GainParams p;
  p.mu = 2.0;
  p.alpha = 3.0;
  p.gamma = 1.0;
  p.zeta = 2.0;
  p.layer = {0.5, 0.0};

  const auto check_rows = [&](const Eigen::MatrixXd& u, const Eigen::MatrixXd& up) {
    for (int i = 0; i < n; ++i)
      REQUIRE((up.row(perm[static_cast<size_t>(i)]) - u.row(i)).cwiseAbs().maxCoeff() <
              1e-12);
  };

  check_rows(distributed_double_step(s, b, g, p).u,
             distributed_double_step(sp, bp, gp, p).u);
  check_rows(continuous_double_step(s, b, g, p).u,
             continuous_double_step(sp, bp, gp, p).u);
  {
    TeamState ss = s;
    ss.v.resize(0, 0);
    TeamState ssp = sp;
    ssp.v.resize(0, 0);
    check_rows(distributed_single_step(ss, b, g).u,
               distributed_single_step(ssp, bp, gp).u);
  }
}
