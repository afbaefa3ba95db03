#include "socialtrack/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

std::string_view to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::uniform_bounded: return "uniform_bounded";
    case NoiseFamily::truncated_gaussian: return "truncated_gaussian";
  }
  return "unknown";
}

std::optional<NoiseFamily> parse_noise_family(std::string_view name) {
  for (auto f : {NoiseFamily::gaussian, NoiseFamily::uniform_bounded, NoiseFamily::truncated_gaussian}) {
    if (name == to_string(f)) return f;
  }
  return std::nullopt;
}

void ModelParams::validate() const {
  auto check = [](bool ok, const char* field, double v) {
    if (!ok) throw ValidationError("model", fmt::format("{} = {} is out of range", field, v));
  };
  check(std::isfinite(a), "a", a);
  check(std::isfinite(sigma_r2) && sigma_r2 >= 0.0, "sigma_r2", sigma_r2);
  check(std::isfinite(sigma_w2) && sigma_w2 >= 0.0, "sigma_w2", sigma_w2);
  check(std::isfinite(x0_mean), "x0_mean", x0_mean);
  check(std::isfinite(x0_var) && x0_var >= 0.0, "x0_var", x0_var);
  if (noise == NoiseFamily::truncated_gaussian) check(std::isfinite(truncation) && truncation > 0.0, "truncation", truncation);
}

double truncated_normal_variance(double c) {
  const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(c / std::numbers::sqrt2);
  return 1.0 - 2.0 * c * pdf / mass;
}

double ModelParams::r_max() const {
  switch (noise) {
    case NoiseFamily::uniform_bounded: return std::sqrt(3.0 * sigma_r2);
    case NoiseFamily::truncated_gaussian: return truncation * std::sqrt(sigma_r2);
    case NoiseFamily::gaussian: break;
  }
  return std::numeric_limits<double>::infinity();
}

double ModelParams::w_max() const {
  switch (noise) {
    case NoiseFamily::uniform_bounded: return std::sqrt(3.0 * sigma_w2);
    case NoiseFamily::truncated_gaussian: return truncation * std::sqrt(sigma_w2);
    case NoiseFamily::gaussian: break;
  }
  return std::numeric_limits<double>::infinity();
}

double ModelParams::innovation_variance() const {
  return noise == NoiseFamily::truncated_gaussian ? sigma_r2 * truncated_normal_variance(truncation) : sigma_r2;
}

double ModelParams::observation_variance() const {
  return noise == NoiseFamily::truncated_gaussian ? sigma_w2 * truncated_normal_variance(truncation) : sigma_w2;
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t trial, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  engine_.seed(seq);
}

double NoiseStream::draw(NoiseFamily family, double variance, double truncation) {
  if (variance == 0.0) return 0.0;
  const double sd = std::sqrt(variance);
  switch (family) {
    case NoiseFamily::gaussian: return sd * standard_normal();
    case NoiseFamily::uniform_bounded: {
      const double h = std::sqrt(3.0 * variance);
      return uniform(-h, h);
    }
    case NoiseFamily::truncated_gaussian: {
      double z;
      do {
        z = standard_normal();
      } while (std::abs(z) > truncation);
      return sd * z;
    }
  }
  return 0.0;
}

double step_state(double x, const ModelParams& params, NoiseStream& rng) {
  return params.a * x + rng.draw(params.noise, params.sigma_r2, params.truncation);
}

Eigen::VectorXd observe(double x, int n, const ModelParams& params, NoiseStream& rng) {
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = x + rng.draw(params.noise, params.sigma_w2, params.truncation);
  return y;
}

World::World(const ModelParams& params, int n, std::uint64_t seed, std::uint64_t trial)
    : params_(params), n_(n), state_rng_(seed, trial, 0), obs_rng_(seed, trial, 1) {
  NoiseStream init(seed, trial, 2);
  x_ = params.x0_mean + (params.x0_var > 0.0 ? std::sqrt(params.x0_var) * init.standard_normal() : 0.0);
}

Eigen::VectorXd World::observe() { return socialtrack::observe(x_, n_, params_, obs_rng_); }

double World::advance() {
  const double r = state_rng_.draw(params_.noise, params_.sigma_r2, params_.truncation);
  x_ = params_.a * x_ + r;
  ++t_;
  return r;
}

WorldTrace generate_trace(const ModelParams& params, int n, int horizon, std::uint64_t seed, std::uint64_t trial) {
  if (horizon < 0) throw ValidationError("model", fmt::format("horizon must be >= 0, got {}", horizon));
  World world(params, n, seed, trial);
  WorldTrace out;
  out.rng_seed = seed;
  out.trial = trial;
  out.x.resize(horizon + 1);
  out.y.resize(n, horizon + 1);
  for (int t = 0; t <= horizon; ++t) {
    out.x(t) = world.state();
    out.y.col(t) = world.observe();
    if (t < horizon) world.advance();
  }
  return out;
}

}  // namespace socialtrack
