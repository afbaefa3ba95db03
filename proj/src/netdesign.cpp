#include "socialtrack/netdesign.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "socialtrack/error.hpp"
#include "socialtrack/msd.hpp"

namespace socialtrack {

namespace {

void check_pair(const CommMatrix& p, int i, int j) {
  if (i < 0 || j < 0 || i >= p.size() || j >= p.size() || i == j) {
    throw ValidationError("netdesign", fmt::format("{{{},{}}} is not a valid node pair for N = {}", i, j, p.size()));
  }
}

void require_stable_base(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params) {
  const double rho = stability_radius(p, params.a, spec.alpha);
  if (!(rho < 1.0 - 1e-12)) {
    throw InstabilityError("netdesign", fmt::format("base system is unstable: rho(Q) = {:.17g}", rho));
  }
}

}  // namespace

Eigen::VectorXd z_scores(const CommMatrix& p, int i, int j, double eps) {
  check_pair(p, i, j);
  const Eigen::MatrixXd& v = p.eigenvectors();
  return -eps * (v.row(i) - v.row(j)).array().square().transpose().matrix();
}

Eigen::VectorXd first_order_terms(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i,
                                  int j, double eps) {
  spec.validate();
  require_stable_base(p, spec, params);
  const double a2 = params.a * params.a;
  const double alpha = spec.alpha;
  const Eigen::VectorXd z = z_scores(p, i, j, eps);
  const Eigen::ArrayXd lambda = p.eigenvalues().array();
  const Eigen::ArrayXd num = 2.0 * (1.0 - alpha * alpha * a2) * lambda + 2.0 * a2 * alpha * lambda.square();
  const Eigen::ArrayXd den = (1.0 - a2 * (lambda - alpha).square()).square();
  return (z.array() * num / den).matrix();
}

double first_order_score(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i, int j,
                         double eps) {
  return first_order_terms(p, spec, params, i, j, eps).sum();
}

double exact_delta_msd(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i, int j,
                       double eps) {
  check_pair(p, i, j);
  if (eps == 0.0) return 0.0;
  const CommMatrix perturbed = perturb(p, {i, j, eps}, PerturbSign::add);
  const MsdReport base = msd_closed_form(p, spec, params);
  const MsdReport next = msd_closed_form(perturbed, spec, params);
  return next.w_msd - base.w_msd;
}

double lower_bound(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i, int j,
                   double eps) {
  check_pair(p, i, j);
  const double a2 = params.a * params.a;
  const double alpha = spec.alpha;
  const Eigen::MatrixXd& m = p.matrix();
  const double p2_ii = m.row(i).squaredNorm();
  const double p2_jj = m.row(j).squaredNorm();
  const double p2_ij = m.row(i).dot(m.row(j));
  double zeta = 0.0;
  for (int k = 1; k < p.size(); ++k) zeta = std::max(zeta, std::abs(p.eigenvalues()(k) - alpha));
  const double den = 1.0 - a2 * zeta * zeta;
  const double num = (1.0 - alpha * alpha * a2) * (m(i, i) + m(j, j)) + a2 * alpha * (p2_ii + p2_jj - 2.0 * p2_ij);
  return -2.0 * eps * num / (den * den);
}

double default_design_eps(const CommMatrix& p) { return std::min(0.1 * p.matrix().diagonal().minCoeff(), 1e-2); }

EdgeSearchResult optimal_edge_search(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params,
                                     std::optional<double> eps, int top_k) {
  spec.validate();
  params.validate();
  if (top_k < 0) throw ValidationError("netdesign", fmt::format("top_k must be >= 0, got {}", top_k));
  require_stable_base(p, spec, params);
  EdgeSearchResult out;
  out.eps = eps.value_or(default_design_eps(p));
  if (!(out.eps > 0.0)) {
    throw ValidationError("netdesign", fmt::format("edge weight eps must be > 0, got {} (is some p_ii zero?)", out.eps));
  }
  out.psd = p.is_psd();
  out.within_guarantees = out.psd && std::abs(params.a * spec.alpha) < 1.0;

  const double scale = params.a * params.a * spec.alpha * spec.alpha * params.observation_variance() / p.size();
  for (const auto& [i, j] : p.support().non_edges()) {
    if (!(out.eps < std::min(p(i, i), p(j, j)))) {
      out.infeasible.emplace_back(i, j);
      continue;
    }
    EdgeCandidate c;
    c.i = i;
    c.j = j;
    c.eps = out.eps;
    c.score_first_order = first_order_score(p, spec, params, i, j, out.eps);
    c.predicted_delta_msd = scale * c.score_first_order;
    c.lower_bound = lower_bound(p, spec, params, i, j, out.eps);
    out.candidates.push_back(c);
  }
  // Scores equal up to rounding (symmetric graphs) keep their (i,j) order.
  double magnitude = 0.0;
  for (const auto& c : out.candidates) magnitude = std::max(magnitude, std::abs(c.score_first_order));
  const double quantum = std::max(magnitude, 1e-300) * 1e-10;
  auto key = [quantum](const EdgeCandidate& c) { return std::llround(c.score_first_order / quantum); };
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [&key](const EdgeCandidate& x, const EdgeCandidate& y) { return key(x) < key(y); });
  const int k = std::min<int>(top_k, static_cast<int>(out.candidates.size()));
  for (int r = 0; r < k; ++r) {
    auto& c = out.candidates[r];
    try {
      c.delta_msd_exact = exact_delta_msd(p, spec, params, c.i, c.j, c.eps);
    } catch (const InstabilityError&) {
      c.delta_msd_exact.reset();
    }
  }
  return out;
}

}  // namespace socialtrack
