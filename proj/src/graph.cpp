#include "socialtrack/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

namespace {

constexpr double kClampTol = 1e-12;
constexpr double kRowSumTol = 1e-9;
constexpr double kSymTol = 1e-12;
constexpr double kLeadTol = 1e-9;
constexpr double kLeadVecTol = 1e-8;

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("graph", msg); }

// Replace the eigenspace of eigenvalue 1 by a basis whose first vector is
// 1/sqrt(N). Columns [0, m) of `vecs` span that eigenspace.
void pin_leading_eigenvector(Eigen::MatrixXd& vecs, Eigen::Index m) {
  const Eigen::Index n = vecs.rows();
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  if (m == 1) {
    if ((vecs.col(0) - u).cwiseAbs().maxCoeff() > kLeadVecTol) {
      fail("leading eigenvector is not the constant vector");
    }
    vecs.col(0) = u;
    return;
  }
  Eigen::MatrixXd rest = vecs.leftCols(m);
  rest -= u * (u.transpose() * rest);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rest);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m - 1);
  vecs.col(0) = u;
  for (Eigen::Index k = 1; k < m; ++k) {
    Eigen::VectorXd col = q.col(k - 1);
    col -= u * u.dot(col);
    col.normalize();
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(col(r)) > 1e-12) {
        if (col(r) < 0.0) col = -col;
        break;
      }
    }
    vecs.col(k) = col;
  }
}

}  // namespace

Graph::Graph(int n, std::vector<Edge> edges) : n_(n) {
  if (n < 1) fail(fmt::format("graph needs at least one node, got n = {}", n));
  for (auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      fail(fmt::format("edge {{{},{}}} has an endpoint outside [0, {})", i, j, n));
    }
    if (i == j) fail(fmt::format("self-loop at node {}", i));
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    fail(fmt::format("duplicate edge {{{},{}}}", dup->first, dup->second));
  }
  edges_ = std::move(edges);
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

std::vector<int> Graph::degrees() const {
  std::vector<int> d(n_, 0);
  for (const auto& [i, j] : edges_) {
    ++d[i];
    ++d[j];
  }
  return d;
}

bool Graph::is_connected() const {
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n_;
  for (const auto& [i, j] : edges_) {
    const int a = find(i), b = find(j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

std::vector<Edge> Graph::non_edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      if (!has_edge(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::string_view to_string(GraphFamily f) {
  switch (f) {
    case GraphFamily::complete: return "complete";
    case GraphFamily::star: return "star";
    case GraphFamily::cycle: return "cycle";
    case GraphFamily::path: return "path";
  }
  return "unknown";
}

std::optional<GraphFamily> parse_graph_family(std::string_view name) {
  for (auto f : {GraphFamily::complete, GraphFamily::star, GraphFamily::cycle, GraphFamily::path}) {
    if (name == to_string(f)) return f;
  }
  return std::nullopt;
}

Graph build_named_graph(GraphFamily family, int n) {
  const int minimum = family == GraphFamily::star ? 2 : family == GraphFamily::cycle ? 3 : 1;
  if (n < minimum) {
    fail(fmt::format("{} graph needs n >= {}, got {}", to_string(family), minimum, n));
  }
  std::vector<Edge> edges;
  switch (family) {
    case GraphFamily::complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case GraphFamily::star:
      for (int j = 1; j < n; ++j) edges.emplace_back(0, j);
      break;
    case GraphFamily::cycle:
      for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      break;
    case GraphFamily::path:
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
  }
  return Graph(n, std::move(edges));
}

Graph random_graph(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

Eigen::MatrixXd laplacian(const Graph& g) {
  const int n = g.size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : g.edges()) {
    l(i, j) -= 1.0;
    l(j, i) -= 1.0;
    l(i, i) += 1.0;
    l(j, j) += 1.0;
  }
  return l;
}

CommMatrix CommMatrix::from_matrix(Eigen::MatrixXd p, const Graph* allowed) {
  const Eigen::Index n = p.rows();
  if (n < 1 || p.cols() != n) fail(fmt::format("communication matrix must be square, got {}x{}", p.rows(), p.cols()));
  if (allowed != nullptr && allowed->size() != n) {
    fail(fmt::format("matrix is {}x{} but graph has {} nodes", n, n, allowed->size()));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = p(i, j);
      if (!std::isfinite(v)) fail(fmt::format("entry p[{}][{}] is not finite", i, j));
      if (v < -kClampTol) fail(fmt::format("entry p[{}][{}] = {:.17g} is negative", i, j, v));
      if (v < 0.0) p(i, j) = 0.0;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(p(i, j) - p(j, i)) > kSymTol) {
        fail(fmt::format("matrix is not symmetric at p[{}][{}] = {:.17g} vs p[{}][{}] = {:.17g}", i, j, p(i, j), j, i,
                         p(j, i)));
      }
      p(j, i) = p(i, j);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = p.row(i).sum();
    if (std::abs(s - 1.0) > kRowSumTol) fail(fmt::format("row {} sums to {:.17g}, expected 1", i, s));
  }
  std::vector<Edge> support;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (p(i, j) > 0.0) {
        if (allowed != nullptr && !allowed->has_edge(i, j)) {
          fail(fmt::format("entry p[{}][{}] = {:.17g} is positive but {{{},{}}} is not an edge", i, j, p(i, j), i, j));
        }
        support.emplace_back(i, j);
      }
    }
  }
  SpectralDecomp spec = eig_sym(p);
  if (std::abs(spec.eigenvalues(0) - 1.0) > kLeadTol) {
    fail(fmt::format("largest eigenvalue is {:.17g}, expected 1", spec.eigenvalues(0)));
  }
  const double lmin = spec.eigenvalues(n - 1);
  if (!(lmin > -1.0 + kLeadTol)) {
    fail(fmt::format("smallest eigenvalue {:.17g} is not above -1 + 1e-9", lmin));
  }
  Eigen::Index m = 1;
  while (m < n && std::abs(spec.eigenvalues(m) - 1.0) <= kLeadTol) ++m;
  pin_leading_eigenvector(spec.eigenvectors, m);
  return CommMatrix(std::move(p), std::move(spec), Graph(static_cast<int>(n), std::move(support)));
}

double CommMatrix::lambda_second() const { return size() > 1 ? spectrum_.eigenvalues(1) : 1.0; }

CommMatrix comm_from_laplacian(const Graph& g, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail(fmt::format("beta must be a finite value >= 0, got {}", beta));
  const Eigen::MatrixXd l = laplacian(g);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(g.size(), g.size()) - beta * l;
  for (int i = 0; i < g.size(); ++i) {
    if (p(i, i) < -kClampTol) {
      fail(fmt::format("beta = {} makes diagonal entry p[{}][{}] = {:.17g} negative", beta, i, i, p(i, i)));
    }
  }
  return CommMatrix::from_matrix(std::move(p), &g);
}

CommMatrix comm_metropolis(const Graph& g) {
  const int n = g.size();
  const auto d = g.degrees();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : g.edges()) {
    const double w = 1.0 / (1.0 + std::max(d[i], d[j]));
    p(i, j) = w;
    p(j, i) = w;
  }
  for (int i = 0; i < n; ++i) p(i, i) = 1.0 - p.row(i).sum();
  return CommMatrix::from_matrix(std::move(p), &g);
}

CommMatrix comm_lazy_metropolis(const Graph& g) {
  const Eigen::MatrixXd base = comm_metropolis(g).matrix();
  Eigen::MatrixXd p = 0.5 * (Eigen::MatrixXd::Identity(g.size(), g.size()) + base);
  return CommMatrix::from_matrix(std::move(p), &g);
}

Eigen::MatrixXd edge_function_matrix(int n, int i, int j) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(i) = 1.0;
  e(j) = -1.0;
  return -e * e.transpose();
}

CommMatrix perturb(const CommMatrix& p, const EdgePerturbation& pert, PerturbSign sign) {
  const int n = p.size();
  const auto [i, j, eps] = pert;
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    fail(fmt::format("perturbation pair {{{},{}}} is not a valid node pair for N = {}", i, j, n));
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) fail(fmt::format("perturbation weight must be > 0, got {}", eps));
  Eigen::MatrixXd q = p.matrix();
  if (sign == PerturbSign::add) {
    if (q(i, j) != 0.0) fail(fmt::format("cannot add edge: p[{}][{}] = {:.17g} is already positive", i, j, q(i, j)));
    const double limit = std::min(q(i, i), q(j, j));
    if (!(eps < limit)) {
      const int at = q(i, i) <= q(j, j) ? i : j;
      fail(fmt::format("cannot add edge {{{},{}}}: eps = {:.17g} must be below self-reliance p[{}][{}] = {:.17g}", i,
                       j, eps, at, at, limit));
    }
    q(i, i) -= eps;
    q(j, j) -= eps;
    q(i, j) += eps;
    q(j, i) += eps;
  } else {
    const double w = q(i, j);
    if (!(w > 0.0) || std::abs(w - eps) > 1e-12 * std::max(1.0, eps)) {
      fail(fmt::format("cannot remove edge {{{},{}}}: eps = {:.17g} must equal p[{}][{}] = {:.17g}", i, j, eps, i, j, w));
    }
    q(i, i) += eps;
    q(j, j) += eps;
    q(i, j) = 0.0;
    q(j, i) = 0.0;
  }
  return CommMatrix::from_matrix(std::move(q));
}

}  // namespace socialtrack
