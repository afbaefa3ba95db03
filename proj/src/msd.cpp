#include "socialtrack/msd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

namespace {

constexpr double kMarginTol = 1e-10;

double require_margin(double a, double lambda, double alpha, int mode) {
  const double d = 1.0 - a * a * (lambda - alpha) * (lambda - alpha);
  if (!(d >= kMarginTol)) {
    throw InstabilityError("msd",
                           fmt::format("mode {} (lambda = {:.17g}) is not stable: 1 - a^2 (lambda - alpha)^2 = {:.3e}",
                                       mode, lambda, d),
                           mode);
  }
  return d;
}

}  // namespace

double innovation_penalty(double a, double alpha, double sigma_r2) {
  const double d = require_margin(a, 1.0, alpha, 0);
  return sigma_r2 / d;
}

MsdReport msd_closed_form(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params) {
  return msd_from_spectrum(p.eigenvalues(), spec, params);
}

MsdReport msd_from_spectrum(const Eigen::VectorXd& eigenvalues, const EstimatorSpec& spec, const ModelParams& params) {
  spec.validate();
  params.validate();
  const int n = static_cast<int>(eigenvalues.size());
  const double a = params.a;
  const double alpha = spec.alpha;
  const double sr = params.innovation_variance();
  const double sw = params.observation_variance();

  MsdReport rep;
  rep.kind = spec.kind;
  rep.alpha = alpha;
  rep.a = a;
  rep.sigma_r2 = sr;
  rep.sigma_w2 = sw;
  rep.eigenvalues.resize(n);
  rep.per_mode.resize(n);
  for (int k = 0; k < n; ++k) {
    const double lambda = eigenvalues(k);
    const double d = require_margin(a, lambda, alpha, k);
    const double m = spec.kind == EstimatorKind::hat ? 1.0 : lambda * lambda;
    rep.eigenvalues[k] = lambda;
    rep.per_mode[k] = a * a * alpha * alpha * sw * m / d / n;
  }
  rep.r_msd = innovation_penalty(a, alpha, sr);
  rep.w_msd = 0.0;
  for (double v : rep.per_mode) rep.w_msd += v;
  rep.total = rep.r_msd + rep.w_msd;
  return rep;
}

Eigen::MatrixXd steady_state_sigma(const ErrorSystem& sys) {
  if (!is_stable(sys)) {
    throw InstabilityError("msd", fmt::format("steady state requires rho(Q) < 1, got {:.17g}", sys.rho));
  }
  const Eigen::MatrixXd& u = sys.modes;
  const Eigen::VectorXd& mu = sys.mode_eigenvalues;
  Eigen::MatrixXd inner = u.transpose() * sys.s * u;
  for (Eigen::Index i = 0; i < inner.rows(); ++i)
    for (Eigen::Index j = 0; j < inner.cols(); ++j) inner(i, j) /= (1.0 - mu(i) * mu(j));
  Eigen::MatrixXd sigma = u * inner * u.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

Eigen::MatrixXd steady_state_sigma_oracle(const ErrorSystem& sys, long max_iterations) {
  if (!is_stable(sys)) {
    throw InstabilityError("msd", fmt::format("Lyapunov iteration requires rho(Q) < 1, got {:.17g}", sys.rho));
  }
  const Eigen::MatrixXd& q = sys.q;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  for (long k = 0; k < max_iterations; ++k) {
    Eigen::MatrixXd next = q * sigma * q.transpose() + sys.s;
    const double step = (next - sigma).norm();
    const double scale = 1.0 + sigma.norm();
    sigma = std::move(next);
    if (!std::isfinite(step)) break;
    if (step < 1e-13 * scale) return sigma;
  }
  throw NumericalError("msd", fmt::format("Lyapunov iteration did not converge in {} steps (rho = {:.17g}, ||Sigma||_F = {:.3e})",
                                          max_iterations, sys.rho, sigma.norm()));
}

namespace {

struct SimpsonPair {
  double fine = 0.0;
  double coarse = 0.0;
};

// Simpson averages of the cycle integrand over [0, 2 pi] with `panels` and
// `panels / 2` panels, from one pass over [0, pi] (the integrand is even
// about pi).
SimpsonPair cycle_simpson(const EstimatorSpec& spec, const ModelParams& params, double beta, int panels) {
  const double a = params.a;
  const double alpha = spec.alpha;
  const double sw = params.observation_variance();
  auto integrand = [&](double tau) {
    const double lambda = 1.0 - beta * (2.0 - 2.0 * std::cos(tau));
    const double m = spec.kind == EstimatorKind::hat ? 1.0 : lambda * lambda;
    return a * a * alpha * alpha * sw * m / (1.0 - a * a * (lambda - alpha) * (lambda - alpha));
  };
  const int half = std::max(4, (panels + 7) / 8 * 4);
  const double h = std::numbers::pi / half;
  double fine = 0.0, coarse = 0.0;
  for (int k = 0; k <= half; ++k) {
    const double f = integrand(k * h);
    const bool end = k == 0 || k == half;
    fine += (end ? 1.0 : (k % 2 ? 4.0 : 2.0)) * f;
    if (k % 2 == 0) coarse += (end ? 1.0 : ((k / 2) % 2 ? 4.0 : 2.0)) * f;
  }
  return {fine * h / 3.0 / std::numbers::pi, coarse * 2.0 * h / 3.0 / std::numbers::pi};
}

}  // namespace

double cycle_limit_integral(const EstimatorSpec& spec, const ModelParams& params, double beta, int panels) {
  return cycle_simpson(spec, params, beta, panels).fine;
}

double msd_limit_named(GraphFamily family, const EstimatorSpec& spec, const ModelParams& params, double beta) {
  spec.validate();
  params.validate();
  const double a = params.a;
  const double alpha = spec.alpha;
  const double sw = params.observation_variance();
  const double r = innovation_penalty(a, alpha, params.innovation_variance());
  const double obs = a * a * alpha * alpha * sw;
  switch (family) {
    case GraphFamily::complete:
      // Bulk eigenvalue is alpha for hat weights and 0 for tilde weights.
      return spec.kind == EstimatorKind::hat ? r + obs : r;
    case GraphFamily::star:
      // Bulk eigenvalue tends to 1, where lambda^2 = 1 as well.
      return r + obs / require_margin(a, 1.0, alpha, 0);
    case GraphFamily::cycle: {
      if (!(beta > 0.0)) throw ValidationError("msd", fmt::format("cycle limit needs beta > 0, got {}", beta));
      // |lambda - alpha| is largest at an end of [1 - 4 beta, 1].
      require_margin(a, 1.0 - 4.0 * beta, alpha, 1);
      constexpr int kPanels = 1 << 14;
      const auto [fine, coarse] = cycle_simpson(spec, params, beta, kPanels);
      if (std::abs(fine - coarse) >= 1e-9 * std::max(1.0, std::abs(fine))) {
        throw NumericalError("msd", fmt::format("cycle integral not converged: {:.17g} vs {:.17g}", fine, coarse));
      }
      return r + fine;
    }
    case GraphFamily::path:
      break;
  }
  throw ValidationError("msd", fmt::format("no closed-form limit for the {} family", to_string(family)));
}

double kalman_steady_state(const ModelParams& params, int n) {
  if (n < 1) throw ValidationError("msd", fmt::format("agent count must be >= 1, got {}", n));
  const double sr = params.sigma_r2;
  const double sw = params.sigma_w2;
  if (!(sw > 0.0)) throw ValidationError("msd", "Kalman baseline needs sigma_w2 > 0");
  const double nn = static_cast<double>(n);
  const double b = params.a * params.a * sw - sw + nn * sr;
  return (b + std::sqrt(b * b + 4.0 * nn * sw * sr)) / (2.0 * nn);
}

double msd_bound_reference(double alpha, const ModelParams& params) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("msd", fmt::format("alpha must lie in (0, 1], got {}", alpha));
  return (params.sigma_r2 + alpha * alpha * params.sigma_w2) / alpha;
}

double connectivity_ratio(double alpha, const ModelParams& params) {
  const double a = params.a;
  const double d = require_margin(a, 1.0, alpha, 0);
  const double obs = a * a * alpha * alpha * params.sigma_w2;
  return (params.sigma_r2 + obs * d) / (params.sigma_r2 + obs);
}

AlphaOptimum optimize_alpha(const std::function<double(double)>& objective, double lo, double hi) {
  auto eval = [&](double alpha) -> std::optional<double> {
    try {
      const double v = objective(alpha);
      if (std::isfinite(v)) return v;
    } catch (const InstabilityError&) {
    } catch (const ValidationError&) {
    }
    return std::nullopt;
  };
  constexpr int kGrid = 1000;
  const double step = (hi - lo) / kGrid;
  int best = -1;
  double best_value = 0.0;
  std::vector<std::optional<double>> values(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k) {
    // The lower end is excluded; nudge it inside.
    const double alpha = k == 0 ? lo + 1e-9 : lo + k * step;
    values[k] = eval(alpha);
    if (values[k] && (best < 0 || *values[k] < best_value)) {
      best = k;
      best_value = *values[k];
    }
  }
  if (best < 0) throw InstabilityError("msd", "no alpha in the search interval stabilizes the system");

  auto grid_alpha = [&](int k) { return k == 0 ? lo + 1e-9 : lo + k * step; };
  double left = grid_alpha(best > 0 && values[best - 1] ? best - 1 : best);
  double right = grid_alpha(best < kGrid && values[best + 1] ? best + 1 : best);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto value_or_inf = [&](double x) { return eval(x).value_or(std::numeric_limits<double>::infinity()); };
  double c = right - inv_phi * (right - left);
  double d = left + inv_phi * (right - left);
  double fc = value_or_inf(c);
  double fd = value_or_inf(d);
  while (right - left > 1e-6) {
    if (fc < fd) {
      right = d;
      d = c;
      fd = fc;
      c = right - inv_phi * (right - left);
      fc = value_or_inf(c);
    } else {
      left = c;
      c = d;
      fc = fd;
      d = left + inv_phi * (right - left);
      fd = value_or_inf(d);
    }
  }
  AlphaOptimum out{0.5 * (left + right), 0.0};
  out.value = value_or_inf(out.alpha);
  if (best_value < out.value) out = {grid_alpha(best), best_value};
  return out;
}

}  // namespace socialtrack
