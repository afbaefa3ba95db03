#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "socialtrack/estimator.hpp"
#include "socialtrack/graph.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack {

/// Steady-state mean-square deviation split into the innovation penalty
/// (r_msd) and the observation penalty (w_msd). `per_mode[k]` is the
/// observation-noise contribution of the k-th eigenvalue of P, so the entries
/// sum to w_msd.
struct MsdReport {
  EstimatorKind kind = EstimatorKind::tilde;
  double alpha = 0.0;
  double a = 0.0;
  double sigma_r2 = 0.0;
  double sigma_w2 = 0.0;
  double r_msd = 0.0;
  double w_msd = 0.0;
  double total = 0.0;
  std::vector<double> eigenvalues;
  std::vector<double> per_mode;

  friend bool operator==(const MsdReport&, const MsdReport&) = default;
};

/// Closed-form steady-state MSD from the spectrum of P. Throws
/// InstabilityError naming the first mode with 1 - a^2 (lambda - alpha)^2
/// below 1e-10 (the lambda = 1 mode is index 0).
MsdReport msd_closed_form(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params);

/// Same evaluation from a spectrum sorted descending with lambda_1 = 1.
MsdReport msd_from_spectrum(const Eigen::VectorXd& eigenvalues, const EstimatorSpec& spec, const ModelParams& params);

/// sigma_r^2 / (1 - a^2 (1 - alpha)^2).
double innovation_penalty(double a, double alpha, double sigma_r2);

/// Steady-state error covariance from the eigen-expansion
/// sum_ij u_i u_i^T S u_j u_j^T / (1 - mu_i mu_j).
Eigen::MatrixXd steady_state_sigma(const ErrorSystem& sys);

/// Steady-state error covariance by fixed-point iteration of
/// Sigma <- Q Sigma Q^T + S from zero, stopping once the update is below
/// 1e-13 (1 + ||Sigma||_F). Does not use the spectrum; it is the reference
/// the closed forms are checked against.
Eigen::MatrixXd steady_state_sigma_oracle(const ErrorSystem& sys, long max_iterations = 1'000'000);

/// N -> infinity limits for named families:
///  complete, hat:   P = I - (1-alpha)/N L   -> R + a^2 alpha^2 sw
///  complete, tilde: P = I - L/N             -> R
///  star:            P = I - (1-alpha)/N L   -> R + a^2 alpha^2 sw / (1 - a^2 (1-alpha)^2)
///  cycle:           P = I - beta L          -> R + (1/2pi) int_0^{2pi} a^2 alpha^2 sw m(tau) / (1 - a^2 (lambda(tau) - alpha)^2)
/// where lambda(tau) = 1 - beta (2 - 2 cos tau) and m = 1 (hat) or lambda^2 (tilde).
double msd_limit_named(GraphFamily family, const EstimatorSpec& spec, const ModelParams& params, double beta = 0.0);

/// Composite Simpson rule used by the cycle limit (2^14 panels).
double cycle_limit_integral(const EstimatorSpec& spec, const ModelParams& params, double beta, int panels);

/// Positive root of the scalar steady-state Riccati equation for a
/// centralized filter seeing all N observations.
double kalman_steady_state(const ModelParams& params, int n);

/// (sigma_r^2 + alpha^2 sigma_w^2) / alpha, a reference bound for a = 1.
double msd_bound_reference(double alpha, const ModelParams& params);

/// Ratio of the complete-network limit (hat) to the disconnected network:
/// [sr + a^2 alpha^2 sw (1 - a^2 (1-alpha)^2)] / (sr + a^2 alpha^2 sw).
double connectivity_ratio(double alpha, const ModelParams& params);

struct AlphaOptimum {
  double alpha = 0.0;
  double value = 0.0;
};

/// Minimizes `objective` over alpha in (lo, hi]. The objective throws
/// InstabilityError (or ValidationError) where alpha is infeasible. A
/// 1001-point scan brackets the best feasible point and golden-section
/// search refines it to |d alpha| <= 1e-6. Throws InstabilityError when no
/// scanned alpha is feasible.
AlphaOptimum optimize_alpha(const std::function<double(double)>& objective, double lo = 0.0, double hi = 1.0);

}  // namespace socialtrack
