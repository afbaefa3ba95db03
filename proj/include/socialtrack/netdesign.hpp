#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "socialtrack/estimator.hpp"
#include "socialtrack/graph.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack {

/// A candidate new edge {i,j} with weight eps and its scores.
struct EdgeCandidate {
  int i = 0;
  int j = 0;
  double eps = 0.0;
  /// sum_k h_k(i,j); first-order change of the tilde MSD up to the factor
  /// a^2 alpha^2 sigma_w^2 / N.
  double score_first_order = 0.0;
  /// score_first_order scaled to MSD units (tilde estimator).
  double predicted_delta_msd = 0.0;
  double lower_bound = 0.0;
  /// MSD(P_eps) - MSD(P); set for the top-ranked candidates only.
  std::optional<double> delta_msd_exact;
};

/// z_k = eps v_k^T Delta P(i,j) v_k = -eps (v_k[i] - v_k[j])^2.
Eigen::VectorXd z_scores(const CommMatrix& p, int i, int j, double eps);

/// Per-mode terms h_k(i,j) of the first-order objective.
Eigen::VectorXd first_order_terms(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i,
                                  int j, double eps);

/// sum_k h_k(i,j). Throws InstabilityError when the base system is unstable.
double first_order_score(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i, int j,
                         double eps);

/// Exact MSD change from adding {i,j} with weight eps, using a fresh
/// decomposition of P_eps. eps = 0 gives exactly 0.
double exact_delta_msd(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i, int j,
                       double eps);

/// -2 eps ((1 - alpha^2 a^2)(p_ii + p_jj) + a^2 alpha ([P^2]_ii + [P^2]_jj - 2 [P^2]_ij))
///   / (1 - a^2 zeta_max^2)^2,  zeta_max = max_{k>1} |lambda_k - alpha|.
/// Bounds sum_k h_k from below when P is PSD and |a alpha| < 1.
double lower_bound(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int i, int j, double eps);

/// 0.1 min_i p_ii, capped at 1e-2.
double default_design_eps(const CommMatrix& p);

struct EdgeSearchResult {
  std::vector<EdgeCandidate> candidates;
  /// Non-edges skipped because eps >= min(p_ii, p_jj).
  std::vector<Edge> infeasible;
  double eps = 0.0;
  bool psd = false;
  /// P PSD and |a alpha| < 1: the sign and lower-bound guarantees apply.
  bool within_guarantees = false;
};

/// Scores every non-edge, sorts ascending by score_first_order (ties by
/// (i,j)) and computes exact_delta_msd for the first `top_k`.
EdgeSearchResult optimal_edge_search(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params,
                                     std::optional<double> eps = std::nullopt, int top_k = 10);

}  // namespace socialtrack
