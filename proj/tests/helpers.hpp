#pragma once

#include <random>

#include <Eigen/Dense>

#include "socialtrack/graph.hpp"

namespace testutil {

/// Solves Sigma = Q Sigma Q^T + S through the Kronecker-vectorized linear
/// system. Independent of any eigendecomposition or iteration.
inline Eigen::MatrixXd lyapunov_direct(const Eigen::MatrixXd& q, const Eigen::MatrixXd& s) {
  const Eigen::Index n = q.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n * n, n * n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index k = 0; k < n; ++k) m(r + c * n, k + l * n) -= q(r, k) * q(c, l);
  const Eigen::VectorXd x = m.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(s.data(), n * n));
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

/// Connected G(n, p) sample that is not complete.
inline socialtrack::Graph connected_graph(int n, double p, std::mt19937_64& rng) {
  for (;;) {
    socialtrack::Graph g = socialtrack::random_graph(n, p, rng);
    if (g.is_connected() && !g.is_complete()) return g;
  }
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
  return (m + m.transpose()) / 2;
}

}  // namespace testutil
