#include "socialtrack/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

std::string_view to_string(BeliefInit b) { return b == BeliefInit::zeros ? "zeros" : "first_observation"; }

std::optional<BeliefInit> parse_belief_init(std::string_view name) {
  if (name == "first_observation") return BeliefInit::first_observation;
  if (name == "zeros") return BeliefInit::zeros;
  return std::nullopt;
}

std::string_view to_string(RecordMode m) {
  switch (m) {
    case RecordMode::aggregate: return "aggregate";
    case RecordMode::per_step: return "per_step";
    case RecordMode::full: return "full";
  }
  return "unknown";
}

std::optional<RecordMode> parse_record_mode(std::string_view name) {
  for (auto m : {RecordMode::aggregate, RecordMode::per_step, RecordMode::full}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

void SimConfig::validate() const {
  if (horizon < 1) throw ValidationError("simulate", fmt::format("horizon must be >= 1, got {}", horizon));
  if (trials < 1) throw ValidationError("simulate", fmt::format("trials must be >= 1, got {}", trials));
  if (burn_in && (*burn_in < 0 || *burn_in >= horizon)) {
    throw ValidationError("simulate", fmt::format("burn_in must lie in [0, horizon), got {}", *burn_in));
  }
  if (threads < 0) throw ValidationError("simulate", fmt::format("threads must be >= 0, got {}", threads));
}

int default_burn_in(double rho, int horizon) {
  const int cap = horizon / 2;
  if (!(rho < 1.0)) return cap;
  if (rho <= 0.0) return 0;
  const double steps = std::ceil(std::log(1e-6) / std::log(rho));
  return static_cast<int>(std::min<double>(steps, cap));
}

void parallel_for_trials(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

namespace {

constexpr double kDivergenceGuard = 1e12;

struct TrialOutcome {
  double msd = 0.0;
  Eigen::VectorXd final_error;
  std::vector<double> series;
  bool aborted = false;
};

TrialOutcome run_one(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, const SimConfig& cfg,
                     int burn_in, int trial) {
  const int n = p.size();
  World world(params, n, cfg.seed, static_cast<std::uint64_t>(trial));
  Eigen::VectorXd y = world.observe();
  Eigen::VectorXd beliefs = cfg.init == BeliefInit::first_observation ? y : Eigen::VectorXd::Zero(n);
  TrialOutcome out;
  const bool keep_series = cfg.record != RecordMode::aggregate;
  if (keep_series) out.series.reserve(cfg.horizon + 1);
  double acc = 0.0;
  for (int t = 0;; ++t) {
    Eigen::VectorXd xi = beliefs.array() - world.state();
    const double sq = xi.squaredNorm();
    if (!(std::sqrt(sq) <= kDivergenceGuard)) {
      out.aborted = true;
      return out;
    }
    const double inst = sq / n;
    if (t > burn_in) acc += inst;
    if (keep_series) out.series.push_back(inst);
    if (t == cfg.horizon) {
      out.final_error = std::move(xi);
      break;
    }
    beliefs = update(spec.kind, beliefs, y, p, params.a, spec.alpha);
    world.advance();
    y = world.observe();
  }
  out.msd = acc / (cfg.horizon - burn_in);
  return out;
}

}  // namespace

SimResult run_trials(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, const SimConfig& cfg) {
  cfg.validate();
  spec.validate();
  params.validate();
  const ErrorSystem sys = build_error_system(p, spec, params);
  SimResult res;
  res.rho = sys.rho;
  res.unstable = !is_stable(sys);
  if (res.unstable && !cfg.allow_unstable) {
    throw InstabilityError("simulate", fmt::format("rho(Q) = {:.17g} >= 1; set allow_unstable to run anyway", sys.rho));
  }
  res.burn_in = cfg.burn_in.value_or(default_burn_in(sys.rho, cfg.horizon));

  std::vector<TrialOutcome> outcomes(cfg.trials);
  parallel_for_trials(cfg.trials, cfg.threads,
                      [&](int k) { outcomes[k] = run_one(p, spec, params, cfg, res.burn_in, k); });

  const int n = p.size();
  res.empirical_sigma = Eigen::MatrixXd::Zero(n, n);
  if (cfg.record != RecordMode::aggregate) res.per_step_msd.assign(cfg.horizon + 1, 0.0);
  double sum = 0.0;
  for (int k = 0; k < cfg.trials; ++k) {
    auto& o = outcomes[k];
    if (o.aborted) {
      res.aborted_trials.push_back(k);
      continue;
    }
    ++res.completed_trials;
    sum += o.msd;
    res.trial_msd.push_back(o.msd);
    res.empirical_sigma += o.final_error * o.final_error.transpose();
    if (cfg.record != RecordMode::aggregate) {
      for (std::size_t t = 0; t < o.series.size(); ++t) res.per_step_msd[t] += o.series[t];
    }
    if (cfg.record == RecordMode::full) res.trial_traces.push_back(std::move(o.series));
  }
  const int m = res.completed_trials;
  if (m == 0) return res;
  res.empirical_msd = sum / m;
  res.empirical_sigma /= m;
  for (double& v : res.per_step_msd) v /= m;
  if (m > 1) {
    double ss = 0.0;
    for (double v : res.trial_msd) ss += (v - res.empirical_msd) * (v - res.empirical_msd);
    res.stderr_msd = std::sqrt(ss / (m - 1) / m);
  }
  return res;
}

Eigen::MatrixXd simulate_errors(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int horizon,
                                std::uint64_t seed, std::uint64_t trial, BeliefInit init) {
  const int n = p.size();
  World world(params, n, seed, trial);
  Eigen::VectorXd y = world.observe();
  Eigen::VectorXd beliefs = init == BeliefInit::first_observation ? y : Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd xi(n, horizon + 1);
  for (int t = 0; t <= horizon; ++t) {
    xi.col(t) = beliefs.array() - world.state();
    if (t == horizon) break;
    beliefs = update(spec.kind, beliefs, y, p, params.a, spec.alpha);
    world.advance();
    y = world.observe();
  }
  return xi;
}

Eigen::MatrixXd empirical_covariance(const std::vector<Eigen::VectorXd>& final_errors) {
  if (final_errors.size() < 2) {
    throw ValidationError("simulate", fmt::format("empirical covariance needs >= 2 trials, got {}", final_errors.size()));
  }
  const Eigen::Index n = final_errors.front().size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (const auto& xi : final_errors) {
    if (xi.size() != n) throw ValidationError("simulate", "final error vectors differ in length");
    out += xi * xi.transpose();
  }
  return out / static_cast<double>(final_errors.size());
}

}  // namespace socialtrack
