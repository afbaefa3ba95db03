#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "socialtrack/graph.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack {

/// hat: innovation from the agent's own observation.
/// tilde: innovation from the neighborhood-averaged observation P y.
enum class EstimatorKind { hat, tilde };

std::string_view to_string(EstimatorKind k);
std::optional<EstimatorKind> parse_estimator_kind(std::string_view name);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::tilde;
  double alpha = 0.5;

  /// Requires 0 < alpha <= 1.
  void validate() const;
};

/// x_+ = a (P x + alpha (y - x)).
Eigen::VectorXd update_hat(const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y, const CommMatrix& p, double a,
                           double alpha);
/// x_+ = a (P x + alpha (P y - x)).
Eigen::VectorXd update_tilde(const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y, const CommMatrix& p, double a,
                             double alpha);
Eigen::VectorXd update(EstimatorKind kind, const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y,
                       const CommMatrix& p, double a, double alpha);

/// Collective error dynamics xi_{t+1} = Q xi_t + s_t.
///
/// Q = a (P - alpha I) shares the eigenvectors of P, so `mode_eigenvalues`
/// (k-th entry a (lambda_k(P) - alpha)) together with `modes` is an exact
/// eigendecomposition of Q, aligned with P's descending spectrum.
struct ErrorSystem {
  EstimatorKind kind = EstimatorKind::tilde;
  Eigen::MatrixXd q;
  /// Covariance of s_t.
  Eigen::MatrixXd s;
  double rho = 0.0;
  Eigen::VectorXd mode_eigenvalues;
  Eigen::MatrixXd modes;

  int size() const { return static_cast<int>(q.rows()); }
};

/// S_hat = sr 11^T + a^2 alpha^2 sw I, S_tilde = sr 11^T + a^2 alpha^2 sw P^2,
/// using the effective noise variances of `params`.
ErrorSystem build_error_system(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params);

/// s_t for one step given the observation noise w and innovation r.
Eigen::VectorXd driving_noise(EstimatorKind kind, const CommMatrix& p, double a, double alpha,
                              const Eigen::VectorXd& w, double r);

/// 2 / (1 - lambda_N(P)); +infinity when lambda_N = 1.
double unbiasedness_bound(const CommMatrix& p);

/// (1 + lambda_N(P)) / 2, the signal weight that admits the widest range of a.
double optimal_alpha_for_stability(const CommMatrix& p);

/// |a| max_i |lambda_i(P) - alpha|.
double stability_radius(const CommMatrix& p, double a, double alpha);

/// rho < 1 - 1e-12.
bool is_stable(const ErrorSystem& sys);

}  // namespace socialtrack
