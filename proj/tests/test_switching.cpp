#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tvopt/switching.hpp"

using namespace tvopt;

TEST_CASE("sig_alpha componentwise powers") {
  Eigen::VectorXd z1(1);
  z1 << -4.0;
  REQUIRE(sig_alpha(z1, 0.5)(0) == Catch::Approx(-2.0));

  Eigen::VectorXd z2(3);
  z2 << 2.0, 0.0, -3.0;
  const Eigen::VectorXd s = sig_alpha(z2, 0.0);
  REQUIRE(s(0) == 1.0);
  REQUIRE(s(1) == 0.0);
  REQUIRE(s(2) == -1.0);

  REQUIRE((sig_alpha(z2, 1.0) - z2).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE_THROWS_AS(sig_alpha(z2, -0.1), std::invalid_argument);
}

TEST_CASE("sig_alpha is odd") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd z(4);
    for (int k = 0; k < 4; ++k) z(k) = dist(gen);
    const double alpha = std::abs(dist(gen)) / 5.0;
    REQUIRE((sig_alpha(-z, alpha) + sig_alpha(z, alpha)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("boundary layer field") {
  Eigen::VectorXd z(2);
  z << 3.0, 4.0;
  const Eigen::VectorXd h = boundary_layer(z, {5.0, 0.0}, 0.0);
  REQUIRE(h(0) == Catch::Approx(0.3));
  REQUIRE(h(1) == Catch::Approx(0.4));

  REQUIRE(boundary_layer(Eigen::VectorXd::Zero(2), {5.0, 0.0}, 0.0).norm() == 0.0);
  REQUIRE(boundary_layer(Eigen::VectorXd::Zero(2), {0.0, 0.0}, 0.0).norm() == 0.0);

  // decaying layer approaches the unit direction
  const Eigen::VectorXd late = boundary_layer(z, {5.0, 1.0}, 40.0);
  REQUIRE(late(0) == Catch::Approx(0.6).margin(1e-9));
  REQUIRE(late(1) == Catch::Approx(0.8).margin(1e-9));
}

TEST_CASE("boundary layer norm and dissipativity") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd z(3);
    for (int k = 0; k < 3; ++k) z(k) = dist(gen);
    if (z.norm() < 1e-9) continue;
    const double eps = std::abs(dist(gen)) + 0.1;
    const double t = std::abs(dist(gen));
    const Eigen::VectorXd h = boundary_layer(z, {eps, 0.5}, t);
    REQUIRE(h.norm() < 1.0);
    REQUIRE(z.dot(h) >= 0.0);
    REQUIRE(boundary_layer(z, {0.0, 0.0}, t).norm() == Catch::Approx(1.0));
  }
}
