#include "socialtrack/regret.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "socialtrack/error.hpp"
#include "socialtrack/msd.hpp"
#include "socialtrack/spectral.hpp"

namespace socialtrack {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void RegretAccumulator::add(const Eigen::VectorXd& xi) {
  if (xi.size() != sum_.rows()) {
    throw ValidationError("regret", fmt::format("error vector has length {}, expected {}", xi.size(), sum_.rows()));
  }
  sum_.noalias() += xi * xi.transpose();
  ++steps_;
}

EmpiricalRegret RegretAccumulator::evaluate(const Eigen::MatrixXd& sigma) const {
  if (steps_ < 1) throw ValidationError("regret", "regret needs at least one step");
  if (sigma.rows() != sum_.rows() || sigma.cols() != sum_.cols()) {
    throw ValidationError("regret", fmt::format("Sigma is {}x{}, expected {}x{}", sigma.rows(), sigma.cols(),
                                                sum_.rows(), sum_.cols()));
  }
  const Eigen::MatrixXd m = sum_ / static_cast<double>(steps_) - sigma;
  return {m.trace() / static_cast<double>(m.rows()), spectral_norm(0.5 * (m + m.transpose()))};
}

EmpiricalRegret empirical_regret(const Eigen::MatrixXd& errors, const Eigen::MatrixXd& sigma) {
  RegretAccumulator acc(static_cast<int>(errors.rows()));
  for (Eigen::Index t = 0; t < errors.cols(); ++t) acc.add(errors.col(t));
  return acc.evaluate(sigma);
}

RegretReport regret_bound(const ErrorSystem& sys, double xi0_norm, double s_bound, int horizon, double delta) {
  if (!is_stable(sys)) throw InstabilityError("regret", fmt::format("regret bound needs rho(Q) < 1, got {:.17g}", sys.rho));
  if (!(s_bound > 0.0)) throw ValidationError("regret", fmt::format("noise bound s must be > 0, got {}", s_bound));
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("regret", fmt::format("delta must lie in (0, 1), got {}", delta));
  if (horizon < 1) throw ValidationError("regret", fmt::format("horizon must be >= 1, got {}", horizon));
  if (!(xi0_norm >= 0.0)) throw ValidationError("regret", "||xi_0|| must be >= 0");

  RegretReport rep;
  rep.horizon = horizon;
  rep.n = sys.size();
  rep.rho = sys.rho;
  rep.delta = delta;
  rep.s_bound = s_bound;
  rep.xi0_norm = xi0_norm;
  const double t = horizon;
  const double rho = sys.rho;
  const double one_m = 1.0 - rho;
  const double one_m2 = 1.0 - rho * rho;
  rep.bound_terms[0] = xi0_norm * xi0_norm / one_m2 / t;
  rep.bound_terms[1] = 2.0 * s_bound * xi0_norm / (one_m * one_m) / t;
  rep.bound_terms[2] = s_bound * s_bound / (one_m2 * one_m2) / t;
  rep.bound_terms[3] = 8.0 * s_bound * s_bound * std::sqrt(2.0 * std::log(rep.n / delta)) / (one_m * one_m) / std::sqrt(t);
  rep.bound_total = rep.bound_terms[0] + rep.bound_terms[1] + rep.bound_terms[2] + rep.bound_terms[3];
  return rep;
}

double noise_norm_bound(const ModelParams& params, const CommMatrix& p, const EstimatorSpec& spec) {
  if (!params.is_bounded()) {
    throw ValidationError("regret",
                          "the regret bound needs bounded noise; use noise = \"uniform_bounded\" or "
                          "\"truncated_gaussian\"");
  }
  // ||P||_2 = 1 for both kinds, so c = 1.
  const double c = 1.0;
  return std::sqrt(static_cast<double>(p.size())) * (std::abs(params.a * spec.alpha) * params.w_max() * c + params.r_max());
}

RegretTable verify_bound(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params,
                         const std::vector<int>& horizons, double delta, int trials, std::uint64_t seed,
                         BeliefInit init, int threads) {
  if (horizons.empty()) throw ValidationError("regret", "horizon grid is empty");
  if (trials < 1) throw ValidationError("regret", fmt::format("trials must be >= 1, got {}", trials));
  std::vector<int> grid = horizons;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 1) throw ValidationError("regret", "horizons must be >= 1");

  const ErrorSystem sys = build_error_system(p, spec, params);
  if (!is_stable(sys)) throw InstabilityError("regret", fmt::format("rho(Q) = {:.17g} >= 1", sys.rho));
  const double s = noise_norm_bound(params, p, spec);
  const Eigen::MatrixXd sigma = steady_state_sigma(sys);
  const int n = p.size();
  const int horizon = grid.back();

  RegretTable table;
  table.s_bound = s;
  table.rho = sys.rho;
  table.delta = delta;
  table.trials = trials;
  table.allowed_violation_rate = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / trials);

  std::vector<std::vector<RegretRow>> per_trial(trials);
  parallel_for_trials(trials, threads, [&](int k) {
    World world(params, n, seed, static_cast<std::uint64_t>(k));
    Eigen::VectorXd y = world.observe();
    Eigen::VectorXd beliefs = init == BeliefInit::first_observation ? y : Eigen::VectorXd::Zero(n);
    const double xi0 = (beliefs.array() - world.state()).matrix().norm();
    RegretAccumulator acc(n);
    std::size_t next = 0;
    auto& rows = per_trial[k];
    for (int t = 1; t <= horizon; ++t) {
      beliefs = update(spec.kind, beliefs, y, p, params.a, spec.alpha);
      world.advance();
      y = world.observe();
      acc.add(beliefs.array() - world.state());
      if (t == grid[next]) {
        const EmpiricalRegret r = acc.evaluate(sigma);
        const RegretReport b = regret_bound(sys, xi0, s, t, delta);
        rows.push_back({t, k, r.trace, r.specnorm, b.bound_total, r.specnorm > b.bound_total});
        ++next;
      }
    }
  });

  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> tr, abs_tr, sn, bd;
    int violations = 0;
    for (int k = 0; k < trials; ++k) {
      const RegretRow& row = per_trial[k][g];
      table.rows.push_back(row);
      tr.push_back(row.regret_trace);
      abs_tr.push_back(std::abs(row.regret_trace));
      sn.push_back(row.regret_specnorm);
      bd.push_back(row.bound_total);
      violations += row.violated ? 1 : 0;
    }
    table.summary.push_back({grid[g], static_cast<double>(violations) / trials, median(tr), median(abs_tr), median(sn),
                             median(bd)});
  }
  return table;
}

}  // namespace socialtrack
