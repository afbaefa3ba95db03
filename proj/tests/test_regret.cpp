#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "socialtrack/error.hpp"
#include "socialtrack/msd.hpp"
#include "socialtrack/regret.hpp"

using namespace socialtrack;

namespace {

ModelParams bounded(double a) {
  ModelParams p;
  p.a = a;
  p.noise = NoiseFamily::uniform_bounded;
  return p;
}

}  // namespace

TEST_SUITE("regret") {
  TEST_CASE("all-zero trajectory") {
    const CommMatrix p = comm_metropolis(build_named_graph(GraphFamily::cycle, 5));
    const ErrorSystem sys = build_error_system(p, {EstimatorKind::tilde, 0.5}, ModelParams{});
    const Eigen::MatrixXd sigma = steady_state_sigma(sys);
    const EmpiricalRegret r = empirical_regret(Eigen::MatrixXd::Zero(5, 40), sigma);
    CHECK(r.trace == doctest::Approx(-sigma.trace() / 5).epsilon(1e-14));
    CHECK(r.specnorm == doctest::Approx(spectral_norm(sigma)).epsilon(1e-12));
  }

  TEST_CASE("noiseless decay from a nonzero start") {
    const CommMatrix p = comm_metropolis(build_named_graph(GraphFamily::path, 6));
    ModelParams params;
    params.a = 0.9;
    params.sigma_r2 = 0;
    params.sigma_w2 = 0;
    params.x0_mean = 2.0;
    const EstimatorSpec spec{EstimatorKind::hat, 0.4};
    const ErrorSystem sys = build_error_system(p, spec, params);
    const int horizon = 50;
    const Eigen::MatrixXd traj = simulate_errors(p, spec, params, horizon, 1, 0, BeliefInit::zeros);
    Eigen::VectorXd xi = traj.col(0);
    CHECK(xi.norm() > 0);
    double expected = 0;
    for (int t = 1; t <= horizon; ++t) {
      xi = sys.q * xi;
      expected += xi.squaredNorm();
    }
    expected /= horizon * 6.0;
    const EmpiricalRegret r = empirical_regret(traj.rightCols(horizon), Eigen::MatrixXd::Zero(6, 6));
    CHECK(r.trace == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.trace >= 0);
  }

  TEST_CASE("trace form never exceeds the spectral form") {
    const CommMatrix p = comm_metropolis(build_named_graph(GraphFamily::cycle, 8));
    const EstimatorSpec spec{EstimatorKind::tilde, 1.0 / 3};
    const ModelParams params = bounded(1.0);
    const Eigen::MatrixXd sigma = steady_state_sigma(build_error_system(p, spec, params));
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd traj = simulate_errors(p, spec, params, 300, 9, trial);
      const EmpiricalRegret r = empirical_regret(traj.rightCols(300), sigma);
      CHECK(r.trace <= r.specnorm);
      RegretAccumulator acc(8);
      for (int t = 1; t <= 300; ++t) acc.add(traj.col(t));
      const EmpiricalRegret streamed = acc.evaluate(sigma);
      CHECK(streamed.trace == doctest::Approx(r.trace).epsilon(1e-12));
    }
  }

  TEST_CASE("bound terms") {
    const CommMatrix p = comm_metropolis(build_named_graph(GraphFamily::cycle, 8));
    const ErrorSystem sys = build_error_system(p, {EstimatorKind::tilde, 1.0 / 3}, bounded(0.75));
    CHECK(sys.rho == doctest::Approx(0.5).epsilon(1e-14));

    const RegretReport zero = regret_bound(sys, 0.0, 1.0, 1000, 0.05);
    CHECK(zero.bound_terms[0] == 0.0);
    CHECK(zero.bound_terms[1] == 0.0);

    const RegretReport r1 = regret_bound(sys, 1.3, 2.0, 1000, 0.05);
    const RegretReport r2 = regret_bound(sys, 1.3, 2.0, 2000, 0.05);
    for (int k = 0; k < 3; ++k) CHECK(r2.bound_terms[k] == doctest::Approx(r1.bound_terms[k] / 2).epsilon(1e-15));
    CHECK(r2.bound_terms[3] == doctest::Approx(r1.bound_terms[3] / std::sqrt(2.0)).epsilon(1e-15));

    const RegretReport r = regret_bound(sys, 0.0, 1.0, 10000, 0.05);
    const double rho = sys.rho, t = 10000;
    const double tail = 1.0 / std::pow(1 - rho * rho, 2) / t;
    const double conc = 8.0 * std::sqrt(2 * std::log(8 / 0.05)) / std::pow(1 - rho, 2) / std::sqrt(t);
    CHECK(r.bound_terms[2] == doctest::Approx(tail).epsilon(1e-12));
    CHECK(r.bound_terms[3] == doctest::Approx(conc).epsilon(1e-12));
    CHECK(r.bound_total == doctest::Approx(tail + conc).epsilon(1e-12));
    // rho = 0.5: tail = 1 / (0.75^2 * 1e4), concentration = 32 sqrt(2 ln 160) / 100
    CHECK(r.bound_total == doctest::Approx(1 / 5625.0 + 0.32 * std::sqrt(2 * std::log(160.0))).epsilon(1e-12));

    CHECK_THROWS_AS(regret_bound(sys, 0.0, 1.0, 0, 0.05), ValidationError);
    CHECK_THROWS_AS(regret_bound(sys, 0.0, 1.0, 10, 1.5), ValidationError);
  }

  TEST_CASE("noise norm bound") {
    const CommMatrix p = comm_metropolis(build_named_graph(GraphFamily::cycle, 8));
    ModelParams params = bounded(0.9);
    params.sigma_w2 = 0;
    const EstimatorSpec spec{EstimatorKind::hat, 0.5};
    CHECK(noise_norm_bound(params, p, spec) == doctest::Approx(std::sqrt(8.0) * params.r_max()));
    params = bounded(0.0);
    CHECK(noise_norm_bound(params, p, spec) == doctest::Approx(std::sqrt(8.0) * params.r_max()));
    params.noise = NoiseFamily::gaussian;
    CHECK_THROWS_AS(noise_norm_bound(params, p, spec), ValidationError);

    for (EstimatorKind kind : {EstimatorKind::hat, EstimatorKind::tilde}) {
      ModelParams q = bounded(1.0);
      const double s = noise_norm_bound(q, p, {kind, 0.7});
      NoiseStream state(3, 0, 0), obs(3, 0, 1);
      double worst = 0;
      for (int t = 0; t < 1'000'000; ++t) {
        Eigen::VectorXd w(8);
        for (int i = 0; i < 8; ++i) w(i) = obs.draw(q.noise, q.sigma_w2, q.truncation);
        const double r = state.draw(q.noise, q.sigma_r2, q.truncation);
        worst = std::max(worst, driving_noise(kind, p, q.a, 0.7, w, r).norm());
      }
      CHECK(worst <= s);
    }
  }

  TEST_CASE("bound verification table") {
    const CommMatrix p = comm_metropolis(build_named_graph(GraphFamily::cycle, 8));
    const EstimatorSpec spec{EstimatorKind::tilde, 1.0 / 3};
    const ModelParams params = bounded(1.0);
    const RegretTable table = verify_bound(p, spec, params, {512, 128, 128}, 0.05, 40, 11, BeliefInit::first_observation, 1);
    REQUIRE(table.rows.size() == 80);
    REQUIRE(table.summary.size() == 2);
    CHECK(table.rows.front().horizon == 128);
    CHECK(table.rows.back().horizon == 512);
    CHECK(table.rows[1].trial == 1);
    CHECK(table.allowed_violation_rate == doctest::Approx(0.05 + 3 * std::sqrt(0.05 * 0.95 / 40)));
    for (const auto& s : table.summary) CHECK(s.violation_rate <= table.allowed_violation_rate);
    for (const auto& row : table.rows) CHECK(row.violated == (row.regret_specnorm > row.bound_total));

    const RegretTable again = verify_bound(p, spec, params, {128, 512}, 0.05, 40, 11, BeliefInit::first_observation, 3);
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
      CHECK(table.rows[k].regret_trace == again.rows[k].regret_trace);
      CHECK(table.rows[k].bound_total == again.rows[k].bound_total);
    }

    ModelParams gaussian;
    CHECK_THROWS_AS(verify_bound(p, spec, gaussian, {128}, 0.05, 4, 1), ValidationError);
  }
}
