#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "socialtrack/estimator.hpp"
#include "socialtrack/graph.hpp"
#include "socialtrack/model.hpp"

namespace socialtrack {

enum class BeliefInit {
  /// x_{i,0} = y_{i,0}
  first_observation,
  zeros,
};

std::string_view to_string(BeliefInit b);
std::optional<BeliefInit> parse_belief_init(std::string_view name);

enum class RecordMode {
  aggregate,
  /// Adds the trial-averaged per-step MSD series.
  per_step,
  /// Adds every trial's per-step series as well.
  full,
};

std::string_view to_string(RecordMode m);
std::optional<RecordMode> parse_record_mode(std::string_view name);

struct SimConfig {
  int horizon = 1000;
  int trials = 16;
  /// Defaults to ceil(log(1e-6) / log(rho)), capped at horizon / 2.
  std::optional<int> burn_in;
  std::uint64_t seed = 1;
  RecordMode record = RecordMode::aggregate;
  BeliefInit init = BeliefInit::first_observation;
  bool allow_unstable = false;
  /// Worker threads; 0 picks the hardware concurrency. Results do not
  /// depend on it.
  int threads = 0;

  void validate() const;
};

int default_burn_in(double rho, int horizon);

struct SimResult {
  /// Trial mean of (1/(T - burn_in)) sum_{t > burn_in} (1/N) ||xi_t||^2.
  double empirical_msd = 0.0;
  /// Standard error of that mean across trials (0 for a single trial).
  double stderr_msd = 0.0;
  /// Trial average of xi_T xi_T^T.
  Eigen::MatrixXd empirical_sigma;
  /// Per-step trial average of (1/N) ||xi_t||^2, t = 0..T (per_step/full).
  std::vector<double> per_step_msd;
  /// Per-trial series (full only).
  std::vector<std::vector<double>> trial_traces;
  /// Per-trial time-averaged MSD.
  std::vector<double> trial_msd;
  int burn_in = 0;
  int completed_trials = 0;
  /// Trials stopped by the divergence guard (||xi_t|| > 1e12).
  std::vector<int> aborted_trials;
  bool unstable = false;
  double rho = 0.0;
};

/// Monte Carlo over independent trials. Trial k draws its world from the
/// streams keyed by (seed, k), so results are independent of scheduling.
/// Throws InstabilityError for rho(Q) >= 1 unless allow_unstable is set.
SimResult run_trials(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, const SimConfig& cfg);

/// Error trajectory xi_0..xi_T (columns) of one trial.
Eigen::MatrixXd simulate_errors(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int horizon,
                                std::uint64_t seed, std::uint64_t trial, BeliefInit init = BeliefInit::first_observation);

/// Average of xi xi^T over the given final error vectors (at least two).
Eigen::MatrixXd empirical_covariance(const std::vector<Eigen::VectorXd>& final_errors);

/// Runs `body(k)` for k in [0, count) on up to `threads` workers.
void parallel_for_trials(int count, int threads, const std::function<void(int)>& body);

}  // namespace socialtrack
