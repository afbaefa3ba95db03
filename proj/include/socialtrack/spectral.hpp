#pragma once

#include <Eigen/Dense>

namespace socialtrack {

/// Eigenpairs of a real symmetric matrix. Eigenvalues are sorted in
/// descending order and column k of `eigenvectors` belongs to eigenvalue k.
/// Each eigenvector is normalized so its first entry with magnitude above
/// 1e-12 is positive, which makes the decomposition reproducible.
struct SpectralDecomp {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  Eigen::Index size() const { return eigenvalues.size(); }
  Eigen::MatrixXd reconstruct() const;
};

/// Symmetric eigendecomposition. Throws ValidationError when
/// max|M - M^T| > 1e-10 or M is not square.
SpectralDecomp eig_sym(const Eigen::MatrixXd& m);

/// Largest eigenvalue magnitude of a symmetric matrix.
double spectral_norm(const Eigen::MatrixXd& m);

}  // namespace socialtrack
