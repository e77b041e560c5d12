#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace tvopt {

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Rotations are applied in row-major sweep order until the off-diagonal
/// Frobenius norm drops below tol * ||A||_F. Matrices here are small
/// (n up to a few hundred), so O(n^3) sweeps are fine.
struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns matched to values
};

inline SymmetricEigen jacobi_eigen(Eigen::MatrixXd a, double tol = 1e-12,
                                   bool want_vectors = true) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("jacobi_eigen: matrix must be square");
  if (!a.isApprox(a.transpose(), 1e-10))
    throw std::invalid_argument("jacobi_eigen: matrix must be symmetric");
  a = ((a + a.transpose()) / 2.0).eval();

  Eigen::MatrixXd v;
  if (want_vectors) v = Eigen::MatrixXd::Identity(n, n);

  const double scale = std::max(a.norm(), 1.0);
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * scale) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        // smaller-angle root of t^2 + 2*theta*t - 1 = 0
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  SymmetricEigen out;
  out.values = a.diagonal();
  // stable insertion sort keeps the vector pairing deterministic
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return out.values(i) < out.values(j);
  });
  Eigen::VectorXd sorted(n);
  Eigen::MatrixXd sorted_v;
  if (want_vectors) sorted_v.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sorted(i) = out.values(order[static_cast<size_t>(i)]);
    if (want_vectors) sorted_v.col(i) = v.col(order[static_cast<size_t>(i)]);
  }
  out.values = std::move(sorted);
  if (want_vectors) out.vectors = std::move(sorted_v);
  return out;
}

inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a, double tol = 1e-12) {
  return jacobi_eigen(a, tol, /*want_vectors=*/false).values;
}

/// Orthonormal basis of the hyperplane { x in R^n : sum(x) = 0 } (Helmert columns).
inline Eigen::MatrixXd mean_zero_basis(int n) {
  if (n < 1) throw std::invalid_argument("mean_zero_basis: n must be positive");
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n - 1);
  for (int j = 1; j < n; ++j) {
    const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
    for (int i = 0; i < j; ++i) u(i, j - 1) = 1.0 / norm;
    u(j, j - 1) = -static_cast<double>(j) / norm;
  }
  return u;
}

}  // namespace tvopt
