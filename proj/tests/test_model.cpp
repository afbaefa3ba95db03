#include <cmath>
#include <numbers>

#include <doctest.h>

#include "socialtrack/error.hpp"
#include "socialtrack/model.hpp"

using namespace socialtrack;

namespace {

double sample_variance(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / (v.size() - 1);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("noiseless state steps") {
    NoiseStream rng(1, 0, 0);
    ModelParams p;
    p.a = 2;
    p.sigma_r2 = 0;
    CHECK(step_state(5, p, rng) == 10);
    p.a = 0;
    CHECK(step_state(-3.7, p, rng) == 0);
  }

  TEST_CASE("innovation variance matches sigma_r^2") {
    for (NoiseFamily f : {NoiseFamily::gaussian, NoiseFamily::uniform_bounded}) {
      ModelParams p;
      p.a = 0;
      p.noise = f;
      NoiseStream rng(42, 0, 0);
      std::vector<double> draws(1'000'000);
      for (double& d : draws) d = step_state(0, p, rng);
      CHECK(sample_variance(draws) == doctest::Approx(1.0).epsilon(0.01));
    }
  }

  TEST_CASE("observations") {
    ModelParams p;
    p.sigma_w2 = 0;
    NoiseStream rng(1, 0, 1);
    const Eigen::VectorXd y = observe(1.25, 5, p, rng);
    CHECK((y.array() == 1.25).all());

    ModelParams q;
    World world(q, 2, 99, 0);
    const int steps = 100'000;
    double cov = 0, corr_wr = 0, var_w = 0, var_r = 0;
    for (int t = 0; t < steps; ++t) {
      const double x = world.state();
      const Eigen::VectorXd obs = world.observe();
      const double w0 = obs(0) - x, w1 = obs(1) - x;
      const double r = world.advance();
      CHECK(world.state() == q.a * x + r);
      cov += w0 * w1;
      corr_wr += w0 * r;
      var_w += w0 * w0;
      var_r += r * r;
    }
    CHECK(std::abs(cov / steps) < 0.01);
    CHECK(std::abs(corr_wr / std::sqrt(var_w * var_r)) < 0.01);
    CHECK(world.time() == steps);
  }

  TEST_CASE("bounded families respect their bounds") {
    ModelParams p;
    p.sigma_r2 = 2.0;
    p.sigma_w2 = 0.5;
    p.noise = NoiseFamily::uniform_bounded;
    CHECK(p.r_max() == doctest::Approx(std::sqrt(6.0)));
    CHECK(p.w_max() == doctest::Approx(std::sqrt(1.5)));
    p.noise = NoiseFamily::truncated_gaussian;
    p.truncation = 2.0;
    CHECK(p.r_max() == doctest::Approx(2 * std::sqrt(2.0)));
    NoiseStream rng(5, 0, 0);
    double lo = 0, hi = 0;
    std::vector<double> draws(200'000);
    for (double& d : draws) {
      d = rng.draw(p.noise, p.sigma_r2, p.truncation);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    CHECK(hi <= p.r_max());
    CHECK(-lo <= p.r_max());
    CHECK(sample_variance(draws) == doctest::Approx(p.innovation_variance()).epsilon(0.01));
  }

  TEST_CASE("truncated normal variance against quadrature") {
    for (double c : {0.5, 1.0, 2.0, 3.0}) {
      const int panels = 20000;
      const double h = 2 * c / panels;
      double mass = 0, second = 0;
      for (int k = 0; k <= panels; ++k) {
        const double z = -c + k * h;
        const double w = (k == 0 || k == panels) ? 1 : (k % 2 ? 4 : 2);
        const double phi = std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi);
        mass += w * phi;
        second += w * z * z * phi;
      }
      CHECK(truncated_normal_variance(c) == doctest::Approx(second / mass).epsilon(1e-10));
    }
    CHECK(truncated_normal_variance(40.0) == doctest::Approx(1.0));
  }

  TEST_CASE("streams are keyed by seed, trial and block") {
    NoiseStream a(7, 3, 0), b(7, 3, 0), c(7, 4, 0), d(7, 3, 1);
    const double x = a.standard_normal();
    CHECK(x == b.standard_normal());
    CHECK(x != c.standard_normal());
    CHECK(x != d.standard_normal());
    const WorldTrace t1 = generate_trace(ModelParams{}, 4, 50, 7, 2);
    const WorldTrace t2 = generate_trace(ModelParams{}, 4, 50, 7, 2);
    CHECK(t1.x == t2.x);
    CHECK(t1.y == t2.y);
    CHECK(t1.y.cols() == 51);
  }

  TEST_CASE("parameter validation") {
    ModelParams p;
    p.sigma_r2 = -1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = ModelParams{};
    p.a = std::nan("");
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = ModelParams{};
    CHECK(std::isinf(p.r_max()));
    CHECK(parse_noise_family("uniform_bounded") == NoiseFamily::uniform_bounded);
  }
}
