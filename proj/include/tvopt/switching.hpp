#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace tvopt {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Componentwise |z_k|^alpha * sgn(z_k). alpha = 0 is the signum path
/// (sgn(0) = 0), alpha = 1 the identity.
inline Eigen::VectorXd sig_alpha(const Eigen::VectorXd& z, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("sig_alpha: alpha must be nonnegative");
  Eigen::VectorXd out(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (z(k) == 0.0)
      out(k) = 0.0;
    else if (alpha == 0.0)
      out(k) = sgn(z(k));
    else
      out(k) = std::pow(std::abs(z(k)), alpha) * sgn(z(k));
  }
  return out;
}

inline Eigen::MatrixXd sign_matrix(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double x) { return sgn(x); });
}

/// Boundary layer around the unit-direction field: epsilon is the layer
/// width, c its decay rate (c = 0 keeps the layer fixed; epsilon = 0 is the
/// exact unit direction).
struct LayerSpec {
  double epsilon = 0.0;
  double c = 0.0;
};

/// h(z) = z / (||z||_2 + epsilon * e^{-c t}); h(0) = 0.
inline Eigen::VectorXd boundary_layer(const Eigen::VectorXd& z, const LayerSpec& spec,
                                      double t) {
  const double norm = z.norm();
  const double layer = spec.epsilon * std::exp(-spec.c * t);
  const double denom = norm + layer;
  if (denom == 0.0) return Eigen::VectorXd::Zero(z.size());
  return z / denom;
}

}  // namespace tvopt
