#include "socialtrack/estimator.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

std::string_view to_string(EstimatorKind k) { return k == EstimatorKind::hat ? "hat" : "tilde"; }

std::optional<EstimatorKind> parse_estimator_kind(std::string_view name) {
  if (name == "hat") return EstimatorKind::hat;
  if (name == "tilde") return EstimatorKind::tilde;
  return std::nullopt;
}

void EstimatorSpec::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("estimator", fmt::format("alpha must lie in (0, 1], got {}", alpha));
  }
}

namespace {

void check_dims(const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y, const CommMatrix& p) {
  if (beliefs.size() != p.size() || y.size() != p.size()) {
    throw ValidationError("estimator", fmt::format("dimension mismatch: beliefs {}, observations {}, P {}",
                                                   beliefs.size(), y.size(), p.size()));
  }
}

}  // namespace

Eigen::VectorXd update_hat(const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y, const CommMatrix& p, double a,
                           double alpha) {
  check_dims(beliefs, y, p);
  return a * (p.matrix() * beliefs + alpha * (y - beliefs));
}

Eigen::VectorXd update_tilde(const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y, const CommMatrix& p, double a,
                             double alpha) {
  check_dims(beliefs, y, p);
  return a * (p.matrix() * beliefs + alpha * (p.matrix() * y - beliefs));
}

Eigen::VectorXd update(EstimatorKind kind, const Eigen::VectorXd& beliefs, const Eigen::VectorXd& y,
                       const CommMatrix& p, double a, double alpha) {
  return kind == EstimatorKind::hat ? update_hat(beliefs, y, p, a, alpha) : update_tilde(beliefs, y, p, a, alpha);
}

ErrorSystem build_error_system(const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params) {
  spec.validate();
  const int n = p.size();
  const double a = params.a;
  const double alpha = spec.alpha;
  const double sr = params.innovation_variance();
  const double sw = params.observation_variance();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  ErrorSystem sys;
  sys.kind = spec.kind;
  sys.q = a * (p.matrix() - alpha * id);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n);
  const double obs = a * a * alpha * alpha * sw;
  sys.s = spec.kind == EstimatorKind::hat ? Eigen::MatrixXd(sr * ones + obs * id)
                                          : Eigen::MatrixXd(sr * ones + obs * (p.matrix() * p.matrix()));
  sys.mode_eigenvalues = a * (p.eigenvalues().array() - alpha);
  sys.modes = p.eigenvectors();
  sys.rho = sys.mode_eigenvalues.cwiseAbs().maxCoeff();
  return sys;
}

Eigen::VectorXd driving_noise(EstimatorKind kind, const CommMatrix& p, double a, double alpha,
                              const Eigen::VectorXd& w, double r) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(w.size());
  if (kind == EstimatorKind::hat) return alpha * a * w - r * ones;
  return alpha * a * (p.matrix() * w) - r * ones;
}

double unbiasedness_bound(const CommMatrix& p) {
  const double gap = 1.0 - p.lambda_min();
  if (gap <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 / gap;
}

double optimal_alpha_for_stability(const CommMatrix& p) { return 0.5 * (1.0 + p.lambda_min()); }

double stability_radius(const CommMatrix& p, double a, double alpha) {
  return std::abs(a) * (p.eigenvalues().array() - alpha).abs().maxCoeff();
}

bool is_stable(const ErrorSystem& sys) { return sys.rho < 1.0 - 1e-12; }

}  // namespace socialtrack
