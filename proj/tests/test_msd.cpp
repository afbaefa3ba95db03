#include <cmath>
#include <numbers>

#include <doctest.h>

#include "helpers.hpp"
#include "socialtrack/error.hpp"
#include "socialtrack/msd.hpp"

using namespace socialtrack;

namespace {

ModelParams unit_params(double a = 1.0) {
  ModelParams p;
  p.a = a;
  return p;
}

double trace_over_n(const Eigen::MatrixXd& sigma) { return sigma.trace() / sigma.rows(); }

}  // namespace

TEST_SUITE("msd") {
  TEST_CASE("static state") {
    std::mt19937_64 rng(1);
    const CommMatrix p = comm_metropolis(testutil::connected_graph(6, 0.5, rng));
    ModelParams params;
    params.a = 0;
    params.sigma_r2 = 1.7;
    for (EstimatorKind kind : {EstimatorKind::hat, EstimatorKind::tilde}) {
      const MsdReport r = msd_closed_form(p, {kind, 0.4}, params);
      CHECK(r.total == doctest::Approx(1.7).epsilon(1e-15));
      CHECK(r.w_msd == 0.0);
    }
  }

  TEST_CASE("disconnected network") {
    ModelParams params;
    params.a = 1.1;
    params.sigma_r2 = 0.6;
    params.sigma_w2 = 1.4;
    const double alpha = 0.7;
    const MsdReport r = msd_closed_form(comm_metropolis(Graph(5)), {EstimatorKind::hat, alpha}, params);
    const double expected = (0.6 + 1.21 * alpha * alpha * 1.4) / (1 - 1.21 * (1 - alpha) * (1 - alpha));
    CHECK(r.total == doctest::Approx(expected).epsilon(1e-13));
  }

  TEST_CASE("closed form matches Lyapunov oracles") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    int checked = 0;
    while (checked < 12) {
      const CommMatrix p = comm_metropolis(testutil::connected_graph(12, 0.3, rng));
      const double alpha = u(rng);
      const double a = 0.9 * unbiasedness_bound(p) * u(rng);
      ModelParams params;
      params.a = a;
      params.sigma_r2 = u(rng);
      params.sigma_w2 = u(rng);
      const EstimatorKind kind = checked % 2 ? EstimatorKind::hat : EstimatorKind::tilde;
      const ErrorSystem sys = build_error_system(p, {kind, alpha}, params);
      if (sys.rho > 0.97) continue;
      const MsdReport r = msd_closed_form(p, {kind, alpha}, params);
      const Eigen::MatrixXd oracle = steady_state_sigma_oracle(sys);
      CHECK(r.total == doctest::Approx(trace_over_n(oracle)).epsilon(1e-8));
      CHECK(r.total == doctest::Approx(trace_over_n(testutil::lyapunov_direct(sys.q, sys.s))).epsilon(1e-8));
      CHECK((steady_state_sigma(sys) - oracle).norm() <= 1e-9);
      double sum = 0;
      for (double v : r.per_mode) sum += v;
      CHECK(sum == doctest::Approx(r.w_msd).epsilon(1e-14));
      CHECK(r.r_msd == doctest::Approx(innovation_penalty(a, alpha, params.sigma_r2)).epsilon(1e-15));
      ++checked;
    }
  }

  TEST_CASE("oracle degenerate cases") {
    const CommMatrix id = comm_metropolis(Graph(3));
    const ErrorSystem zero = build_error_system(id, {EstimatorKind::hat, 1.0}, unit_params());
    CHECK((steady_state_sigma_oracle(zero) - zero.s).cwiseAbs().maxCoeff() == 0.0);

    const CommMatrix one = comm_metropolis(Graph(1));
    const ErrorSystem scalar = build_error_system(one, {EstimatorKind::hat, 0.4}, unit_params(0.9));
    const double q = scalar.q(0, 0);
    CHECK(steady_state_sigma_oracle(scalar)(0, 0) == doctest::Approx(scalar.s(0, 0) / (1 - q * q)).epsilon(1e-12));
  }

  TEST_CASE("instability reports the failing mode") {
    const CommMatrix c10 = comm_metropolis(build_named_graph(GraphFamily::cycle, 10));
    try {
      msd_closed_form(c10, {EstimatorKind::tilde, 0.9}, unit_params(1.2));
      FAIL("expected InstabilityError");
    } catch (const InstabilityError& e) {
      CHECK(e.mode() == 7);
    }
    const ErrorSystem sys = build_error_system(c10, {EstimatorKind::tilde, 0.9}, unit_params(1.2));
    CHECK_THROWS_AS(steady_state_sigma_oracle(sys), InstabilityError);
  }

  TEST_CASE("complete-graph limits") {
    const double alpha = 0.6, a = 0.95;
    ModelParams params = unit_params(a);
    params.sigma_r2 = 0.8;
    params.sigma_w2 = 1.3;
    const double r = innovation_penalty(a, alpha, 0.8);
    const double hat_limit = msd_limit_named(GraphFamily::complete, {EstimatorKind::hat, alpha}, params);
    CHECK(hat_limit == doctest::Approx(r + a * a * alpha * alpha * 1.3));
    CHECK(msd_limit_named(GraphFamily::complete, {EstimatorKind::tilde, alpha}, params) == doctest::Approx(r));

    double prev_hat = INFINITY, prev_tilde = INFINITY;
    for (int n : {10, 100, 1000}) {
      const Graph kn = build_named_graph(GraphFamily::complete, n);
      const double gap_hat =
          std::abs(msd_closed_form(comm_from_laplacian(kn, (1 - alpha) / n), {EstimatorKind::hat, alpha}, params).total -
                   hat_limit);
      const double gap_tilde =
          std::abs(msd_closed_form(comm_from_laplacian(kn, 1.0 / n), {EstimatorKind::tilde, alpha}, params).total - r);
      CHECK(gap_hat < prev_hat);
      CHECK(gap_tilde < prev_tilde);
      CHECK(gap_hat * n < 5);
      prev_hat = gap_hat;
      prev_tilde = gap_tilde;
    }
  }

  TEST_CASE("star and cycle limits agree with large finite networks") {
    const double alpha = 0.55;
    const ModelParams params = unit_params(0.97);
    const int n = 500;
    const double star =
        msd_closed_form(comm_from_laplacian(build_named_graph(GraphFamily::star, n), (1 - alpha) / n),
                        {EstimatorKind::hat, alpha}, params)
            .total;
    CHECK(star == doctest::Approx(msd_limit_named(GraphFamily::star, {EstimatorKind::hat, alpha}, params)).epsilon(1e-3));

    for (EstimatorKind kind : {EstimatorKind::hat, EstimatorKind::tilde}) {
      const double beta = 0.2;
      const double finite =
          msd_closed_form(comm_from_laplacian(build_named_graph(GraphFamily::cycle, 400), beta), {kind, alpha}, params)
              .total;
      CHECK(finite == doctest::Approx(msd_limit_named(GraphFamily::cycle, {kind, alpha}, params, beta)).epsilon(1e-6));
    }
    CHECK_THROWS_AS(msd_limit_named(GraphFamily::cycle, {EstimatorKind::hat, alpha}, params, 0.0), ValidationError);
    CHECK_THROWS_AS(msd_limit_named(GraphFamily::path, {EstimatorKind::hat, alpha}, params), ValidationError);
  }

  TEST_CASE("centralized Kalman filter") {
    ModelParams params = unit_params(0.9);
    params.sigma_r2 = 0.7;
    params.sigma_w2 = 2.0;
    for (int n : {1, 10, 1000}) {
      const double s = kalman_steady_state(params, n);
      const double v = params.sigma_w2 / n;
      CHECK(std::abs(s - (params.a * params.a * s * v / (s + v) + params.sigma_r2)) <= 1e-10);
    }
    CHECK(kalman_steady_state(params, 1'000'000) == doctest::Approx(0.7).epsilon(1e-4));
    params.sigma_r2 = 0;
    CHECK(kalman_steady_state(params, 10) == 0.0);
  }

  TEST_CASE("reference bound and connectivity ratio") {
    const ModelParams params = unit_params();
    CHECK(msd_bound_reference(1.0, params) == doctest::Approx(2.0));
    CHECK(msd_bound_reference(0.5, params) == doctest::Approx(2.5));
    const AlphaOptimum opt = optimize_alpha([&](double a) { return msd_bound_reference(a, params); });
    CHECK(opt.alpha == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(opt.value == doctest::Approx(2.0).epsilon(1e-9));

    ModelParams quiet = unit_params(0.8);
    quiet.sigma_w2 = 0;
    CHECK(connectivity_ratio(0.3, quiet) == doctest::Approx(1.0));

    ModelParams rare = unit_params(0.8);
    rare.sigma_r2 = 1e-8;
    CHECK(std::abs(connectivity_ratio(0.3, rare) - (1 - 0.64 * 0.49)) < 1e-6);

    ModelParams limit = unit_params(1.0);
    limit.sigma_r2 = 1e-14;
    for (double alpha : {0.2, 0.05, 0.01}) {
      CHECK(connectivity_ratio(alpha, limit) == doctest::Approx(2 * alpha - alpha * alpha).epsilon(1e-6));
    }

    const double alpha = 0.45;
    ModelParams p = unit_params(0.9);
    p.sigma_r2 = 0.3;
    const double disconnected = msd_closed_form(comm_metropolis(Graph(4)), {EstimatorKind::hat, alpha}, p).total;
    const double complete = msd_limit_named(GraphFamily::complete, {EstimatorKind::hat, alpha}, p);
    CHECK(connectivity_ratio(alpha, p) == doctest::Approx(complete / disconnected).epsilon(1e-13));
  }

  TEST_CASE("named-limit optima") {
    const ModelParams params = unit_params();
    const auto complete = optimize_alpha(
        [&](double a) { return msd_limit_named(GraphFamily::complete, {EstimatorKind::hat, a}, params); });
    CHECK(complete.value == doctest::Approx(1.55).epsilon(0.01 / 1.55));
    const auto star =
        optimize_alpha([&](double a) { return msd_limit_named(GraphFamily::star, {EstimatorKind::hat, a}, params); });
    CHECK(star.value == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-6));
    CHECK(star.alpha == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-4));
    const auto cycle = optimize_alpha(
        [&](double a) { return msd_limit_named(GraphFamily::cycle, {EstimatorKind::hat, a}, params, 1e-6); });
    CHECK(cycle.value == doctest::Approx(star.value).epsilon(1e-4));
    CHECK_THROWS_AS(optimize_alpha([](double) -> double { throw InstabilityError("msd", "never"); }),
                    InstabilityError);
  }
}
