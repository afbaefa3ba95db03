#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace socialtrack {

enum class NoiseFamily {
  gaussian,
  /// Uniform on [-h, h] with h = sqrt(3 sigma^2): same variance as configured.
  uniform_bounded,
  /// Gaussian conditioned on |z| <= c sigma (rejection sampled). Bounded,
  /// but its variance is slightly below sigma^2; see effective variances.
  truncated_gaussian,
};

std::string_view to_string(NoiseFamily f);
std::optional<NoiseFamily> parse_noise_family(std::string_view name);

/// Hidden-state dynamics x_{t+1} = a x_t + r_t and private observations
/// y_{i,t} = x_t + w_{i,t}.
struct ModelParams {
  double a = 1.0;
  double sigma_r2 = 1.0;
  double sigma_w2 = 1.0;
  /// x_0 ~ x0_mean + N(0, x0_var); x0_var = 0 is a point mass.
  double x0_mean = 0.0;
  double x0_var = 0.0;
  NoiseFamily noise = NoiseFamily::gaussian;
  /// Truncation point in standard deviations for truncated_gaussian.
  double truncation = 3.0;

  /// Throws ValidationError on negative variances or non-finite values.
  void validate() const;

  bool is_bounded() const { return noise != NoiseFamily::gaussian; }
  /// Almost-sure bounds |r_t| <= r_max, |w_{i,t}| <= w_max (bounded families).
  double r_max() const;
  double w_max() const;
  /// Actual variance of the drawn noise (differs from sigma^2 only when
  /// truncated).
  double innovation_variance() const;
  double observation_variance() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Variance of a standard normal conditioned on |z| <= c.
double truncated_normal_variance(double c);

/// Random stream keyed by (seed, trial, block). Streams with different keys
/// are statistically independent, so trials can run in any order.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t trial, std::uint64_t block);

  double standard_normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  /// Zero-mean draw with nominal variance `variance` from `family`.
  double draw(NoiseFamily family, double variance, double truncation);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// a x + r with r drawn from the innovation distribution.
double step_state(double x, const ModelParams& params, NoiseStream& rng);

/// y_i = x + w_i for i = 0..n-1.
Eigen::VectorXd observe(double x, int n, const ModelParams& params, NoiseStream& rng);

/// Simulated world for one trial. Innovations and observation noise come
/// from separate streams (blocks 0 and 1), x_0 from block 2.
class World {
 public:
  World(const ModelParams& params, int n, std::uint64_t seed, std::uint64_t trial);

  double state() const { return x_; }
  /// Observation vector for the current time step.
  Eigen::VectorXd observe();
  /// Advance to t + 1; returns the innovation r_t that was applied.
  double advance();
  int time() const { return t_; }

 private:
  ModelParams params_;
  int n_;
  NoiseStream state_rng_;
  NoiseStream obs_rng_;
  double x_;
  int t_ = 0;
};

/// Full record of one world run: x_0..x_T and the N x (T+1) observations.
struct WorldTrace {
  Eigen::VectorXd x;
  Eigen::MatrixXd y;
  std::uint64_t rng_seed = 0;
  std::uint64_t trial = 0;
};

WorldTrace generate_trace(const ModelParams& params, int n, int horizon, std::uint64_t seed,
                          std::uint64_t trial = 0);

}  // namespace socialtrack
