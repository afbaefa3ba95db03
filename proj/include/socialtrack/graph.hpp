#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "socialtrack/spectral.hpp"

namespace socialtrack {

using Edge = std::pair<int, int>;

/// Simple undirected graph on nodes 0..n-1. Edges are stored normalized
/// (first < second) and sorted; duplicates and self-loops are rejected.
class Graph {
 public:
  explicit Graph(int n, std::vector<Edge> edges = {});

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_edge(int i, int j) const;
  std::vector<int> degrees() const;
  bool is_connected() const;
  bool is_complete() const { return edges_.size() == static_cast<std::size_t>(n_) * (n_ - 1) / 2; }

  /// Node pairs {i,j}, i<j, that are not edges, in lexicographic order.
  std::vector<Edge> non_edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_;
  std::vector<Edge> edges_;
};

enum class GraphFamily { complete, star, cycle, path };

std::string_view to_string(GraphFamily f);
std::optional<GraphFamily> parse_graph_family(std::string_view name);

/// Complete (n>=1), star with hub 0 (n>=2), cycle (n>=3) or path (n>=1).
Graph build_named_graph(GraphFamily family, int n);

/// G(n, p) sample; used for randomized tests and experiments.
Graph random_graph(int n, double p, std::mt19937_64& rng);

/// L = D - A.
Eigen::MatrixXd laplacian(const Graph& g);

/// Symmetric doubly stochastic communication matrix with its spectrum.
///
/// Construction enforces: exact symmetry, entries >= 0 (values in
/// [-1e-12, 0) are clamped to zero), row sums within 1e-9 of one, support
/// contained in the supplied graph, lambda_1 = 1 within 1e-9 and
/// lambda_N > -1 + 1e-9. The leading eigenvector is pinned to the constant
/// vector 1/sqrt(N), also when the eigenvalue 1 is repeated (disconnected
/// graphs).
class CommMatrix {
 public:
  /// Validates `p`. When `allowed` is given, every positive off-diagonal
  /// entry must be an edge of it.
  static CommMatrix from_matrix(Eigen::MatrixXd p, const Graph* allowed = nullptr);

  const Eigen::MatrixXd& matrix() const { return p_; }
  double operator()(int i, int j) const { return p_(i, j); }
  int size() const { return static_cast<int>(p_.rows()); }

  const SpectralDecomp& spectrum() const { return spectrum_; }
  const Eigen::VectorXd& eigenvalues() const { return spectrum_.eigenvalues; }
  const Eigen::MatrixXd& eigenvectors() const { return spectrum_.eigenvectors; }
  double lambda_min() const { return spectrum_.eigenvalues(size() - 1); }
  /// Second largest eigenvalue (1 for disconnected support); 1 when N = 1.
  double lambda_second() const;

  /// Graph induced by the positive off-diagonal entries.
  const Graph& support() const { return support_; }

  bool is_psd(double tol = 1e-10) const { return lambda_min() >= -tol; }

 private:
  CommMatrix(Eigen::MatrixXd p, SpectralDecomp spectrum, Graph support)
      : p_(std::move(p)), spectrum_(std::move(spectrum)), support_(std::move(support)) {}

  Eigen::MatrixXd p_;
  SpectralDecomp spectrum_;
  Graph support_;
};

/// P = I - beta L. Throws ValidationError for beta < 0, a negative diagonal
/// or lambda_N(P) <= -1 + 1e-9.
CommMatrix comm_from_laplacian(const Graph& g, double beta);

/// Metropolis-Hastings weights p_ij = 1 / (1 + max(d_i, d_j)).
CommMatrix comm_metropolis(const Graph& g);

/// (I + P) / 2 applied to Metropolis weights; always positive semidefinite.
CommMatrix comm_lazy_metropolis(const Graph& g);

/// Weight transfer along {i,j}: adding moves eps from both self-reliances to
/// the pair, removing moves it back.
struct EdgePerturbation {
  int i = 0;
  int j = 0;
  double eps = 0.0;
};

enum class PerturbSign { add, remove };

/// Delta P(i,j) = -(e_i - e_j)(e_i - e_j)^T.
Eigen::MatrixXd edge_function_matrix(int n, int i, int j);

/// P +/- eps Delta P(i,j). Adding requires p_ij = 0 and
/// eps < min(p_ii, p_jj); removing requires p_ij = eps (to 1e-12 relative).
CommMatrix perturb(const CommMatrix& p, const EdgePerturbation& pert, PerturbSign sign);

}  // namespace socialtrack
