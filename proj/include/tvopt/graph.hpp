#pragma once

#include <Eigen/Dense>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tvopt/linalg.hpp"

namespace tvopt {

/// Undirected interaction topology. The edge list stores each edge once as
/// (i, j) with i < j; that pair order is also the fixed orientation used by
/// the incidence matrix (tail = smaller index).
struct Graph {
  int n = 0;
  Eigen::MatrixXi adjacency;               // symmetric 0/1, zero diagonal
  std::vector<std::pair<int, int>> edges;  // i < j, lexicographic order

  int edge_count() const { return static_cast<int>(edges.size()); }
};

/// Per-edge nonnegative gains beta_ij = beta_ji, aligned with Graph::edges.
struct EdgeGains {
  Eigen::VectorXd beta;
};

inline Graph graph_from_adjacency(Eigen::MatrixXi adj) {
  Graph g;
  g.n = static_cast<int>(adj.rows());
  if (adj.cols() != adj.rows())
    throw std::invalid_argument("graph: adjacency must be square");
  for (int i = 0; i < g.n; ++i) {
    if (adj(i, i) != 0) throw std::invalid_argument("graph: self-loops not allowed");
    for (int j = i + 1; j < g.n; ++j) {
      if (adj(i, j) != adj(j, i))
        throw std::invalid_argument("graph: adjacency must be symmetric");
      if (adj(i, j) != 0 && adj(i, j) != 1)
        throw std::invalid_argument("graph: adjacency entries must be 0 or 1");
      if (adj(i, j) == 1) g.edges.emplace_back(i, j);
    }
  }
  g.adjacency = std::move(adj);
  return g;
}

inline Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 1) throw std::invalid_argument("graph: need at least one node");
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::invalid_argument("graph: edge references a node out of range");
    if (i == j) throw std::invalid_argument("graph: self-loops not allowed");
    adj(i, j) = adj(j, i) = 1;
  }
  return graph_from_adjacency(std::move(adj));
}

inline Graph make_empty(int n) { return graph_from_edges(n, {}); }

inline Graph make_path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return graph_from_edges(n, e);
}

inline Graph make_ring(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  if (n > 2) e.emplace_back(0, n - 1);
  return graph_from_edges(n, e);
}

inline Graph make_complete(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return graph_from_edges(n, e);
}

/// Edge (i,j) present iff ||x_i - x_j||_2 < R. Positions are rows of x.
inline Graph proximity_graph(const Eigen::MatrixXd& positions, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("proximity_graph: R must be positive");
  const int n = static_cast<int>(positions.rows());
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((positions.row(i) - positions.row(j)).norm() < radius) adj(i, j) = adj(j, i) = 1;
  return graph_from_adjacency(std::move(adj));
}

inline Eigen::MatrixXd laplacian(const Graph& g) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(g.n, g.n);
  for (auto [i, j] : g.edges) {
    l(i, i) += 1.0;
    l(j, j) += 1.0;
    l(i, j) -= 1.0;
    l(j, i) -= 1.0;
  }
  return l;
}

inline Eigen::MatrixXd incidence(const Graph& g) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.n, g.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) {
    d(g.edges[static_cast<size_t>(k)].first, k) = -1.0;
    d(g.edges[static_cast<size_t>(k)].second, k) = 1.0;
  }
  return d;
}

/// Gain-weighted incidence D' (columns scaled by beta_ij) and L' = D' D'^T,
/// whose entries are the squared weighted adjacency a'_ij = a_ij beta_ij.
struct WeightedIncidence {
  Eigen::MatrixXd dprime;
  Eigen::MatrixXd lprime;
};

inline WeightedIncidence weighted_incidence(const Graph& g, const EdgeGains& gains) {
  if (gains.beta.size() != g.edge_count())
    throw std::invalid_argument("weighted_incidence: one gain per edge required");
  WeightedIncidence w;
  w.dprime = Eigen::MatrixXd::Zero(g.n, g.edge_count());
  for (int k = 0; k < g.edge_count(); ++k) {
    const double b = gains.beta(k);
    w.dprime(g.edges[static_cast<size_t>(k)].first, k) = -b;
    w.dprime(g.edges[static_cast<size_t>(k)].second, k) = b;
  }
  w.lprime = w.dprime * w.dprime.transpose();
  return w;
}

inline bool is_connected(const Graph& g) {
  if (g.n <= 1) return true;
  std::vector<char> seen(static_cast<size_t>(g.n), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < g.n; ++j) {
      if (g.adjacency(i, j) == 1 && !seen[static_cast<size_t>(j)]) {
        seen[static_cast<size_t>(j)] = 1;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == g.n;
}

/// Algebraic connectivity: second-smallest Laplacian eigenvalue.
inline double lambda2(const Graph& g) {
  if (g.n < 2) throw std::invalid_argument("lambda2: need at least two nodes");
  const Eigen::VectorXd evals = symmetric_eigenvalues(laplacian(g));
  return evals(1);
}

}  // namespace tvopt
