#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "socialtrack/estimator.hpp"
#include "socialtrack/graph.hpp"
#include "socialtrack/model.hpp"
#include "socialtrack/simulate.hpp"

namespace socialtrack {

/// Regret of a trajectory against the steady-state covariance Sigma:
/// trace form (1/N) Tr(M) and its spectral-norm majorant ||M||, with
/// M = (1/T) sum_{t=1}^T xi_t xi_t^T - Sigma.
struct EmpiricalRegret {
  double trace = 0.0;
  double specnorm = 0.0;
};

/// Streaming accumulator for sum_t xi_t xi_t^T (rank-one updates).
class RegretAccumulator {
 public:
  explicit RegretAccumulator(int n) : sum_(Eigen::MatrixXd::Zero(n, n)) {}

  void add(const Eigen::VectorXd& xi);
  int steps() const { return steps_; }
  /// Requires at least one step and a matching Sigma.
  EmpiricalRegret evaluate(const Eigen::MatrixXd& sigma) const;

 private:
  Eigen::MatrixXd sum_;
  int steps_ = 0;
};

/// `errors` holds xi_1..xi_T as columns (xi_0 excluded).
EmpiricalRegret empirical_regret(const Eigen::MatrixXd& errors, const Eigen::MatrixXd& sigma);

/// High-probability regret bound for horizon T:
///   ||xi_0||^2 / (1 - rho^2) / T
/// + 2 s ||xi_0|| / (1 - rho)^2 / T
/// + s^2 / (1 - rho^2)^2 / T
/// + 8 s^2 sqrt(2 log(N / delta)) / (1 - rho)^2 / sqrt(T)
struct RegretReport {
  int horizon = 0;
  int n = 0;
  double rho = 0.0;
  double delta = 0.0;
  double s_bound = 0.0;
  double xi0_norm = 0.0;
  /// transient quadratic, cross, tail, concentration
  std::array<double, 4> bound_terms{};
  double bound_total = 0.0;
  double empirical_trace = 0.0;
  double empirical_specnorm = 0.0;

  friend bool operator==(const RegretReport&, const RegretReport&) = default;
};

RegretReport regret_bound(const ErrorSystem& sys, double xi0_norm, double s_bound, int horizon, double delta);

/// a.s. bound on ||s_t||: sqrt(N) (|a alpha| w_max + r_max). Requires a
/// bounded noise family.
double noise_norm_bound(const ModelParams& params, const CommMatrix& p, const EstimatorSpec& spec);

struct RegretRow {
  int horizon = 0;
  int trial = 0;
  double regret_trace = 0.0;
  double regret_specnorm = 0.0;
  double bound_total = 0.0;
  bool violated = false;
};

struct RegretSummary {
  int horizon = 0;
  double violation_rate = 0.0;
  double median_trace = 0.0;
  double median_abs_trace = 0.0;
  double median_specnorm = 0.0;
  double median_bound = 0.0;
};

struct RegretTable {
  std::vector<RegretRow> rows;
  std::vector<RegretSummary> summary;
  /// delta + 3 sqrt(delta (1 - delta) / trials).
  double allowed_violation_rate = 0.0;
  double s_bound = 0.0;
  double rho = 0.0;
  double delta = 0.0;
  int trials = 0;
};

/// Runs `trials` independent trajectories to max(horizons) and compares the
/// spectral-norm regret with each trial's own bound at every horizon.
RegretTable verify_bound(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params,
                         const std::vector<int>& horizons, double delta, int trials, std::uint64_t seed,
                         BeliefInit init = BeliefInit::first_observation, int threads = 0);

}  // namespace socialtrack
