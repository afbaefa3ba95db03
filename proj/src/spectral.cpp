#include "socialtrack/spectral.hpp"

#include <cmath>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kSignTol = 1e-12;

void require_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw ValidationError("spectral", fmt::format("matrix must be square, got {}x{}", m.rows(), m.cols()));
  }
  if (m.size() == 0) {
    throw ValidationError("spectral", "matrix is empty");
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= kSymmetryTol)) {
    throw ValidationError("spectral", fmt::format("matrix is not symmetric (max |M - M^T| = {:.3e})", asym));
  }
}

}  // namespace

Eigen::MatrixXd SpectralDecomp::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

SpectralDecomp eig_sym(const Eigen::MatrixXd& m) {
  require_symmetric(m);
  // The solver reads the lower triangle only.
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral", "symmetric eigensolver did not converge");
  }
  const Eigen::Index n = m.rows();
  SpectralDecomp out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < n; ++k) {
    auto col = out.eigenvectors.col(k);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(col(r)) > kSignTol) {
        if (col(r) < 0.0) col = -col;
        break;
      }
    }
  }
  return out;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  require_symmetric(m);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral", "symmetric eigensolver did not converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace socialtrack
