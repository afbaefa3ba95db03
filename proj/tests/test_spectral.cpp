#include <doctest.h>

#include "helpers.hpp"
#include "socialtrack/error.hpp"
#include "socialtrack/spectral.hpp"

using namespace socialtrack;

TEST_SUITE("spectral") {
  TEST_CASE("identity has unit eigenvalues") {
    const auto d = eig_sym(Eigen::MatrixXd::Identity(3, 3));
    for (int k = 0; k < 3; ++k) CHECK(d.eigenvalues(k) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("diagonal matrix sorts descending with basis eigenvectors") {
    Eigen::MatrixXd m = Eigen::Vector3d(3, 1, 2).asDiagonal();
    const auto d = eig_sym(m);
    CHECK(d.eigenvalues(0) == doctest::Approx(3));
    CHECK(d.eigenvalues(1) == doctest::Approx(2));
    CHECK(d.eigenvalues(2) == doctest::Approx(1));
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected(0, 0) = 1;
    expected(2, 1) = 1;
    expected(1, 2) = 1;
    CHECK((d.eigenvectors - expected).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("random symmetric reconstruction and orthonormality") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::MatrixXd m = testutil::random_symmetric(8, rng);
      const auto d = eig_sym(m);
      CHECK((d.reconstruct() - m).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((d.eigenvectors.transpose() * d.eigenvectors - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <
            1e-12);
      for (int k = 1; k < 8; ++k) CHECK(d.eigenvalues(k - 1) >= d.eigenvalues(k));
    }
  }

  TEST_CASE("sign convention is deterministic") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd m = testutil::random_symmetric(6, rng);
    const auto d = eig_sym(m);
    for (int k = 0; k < 6; ++k) {
      int first = 0;
      while (std::abs(d.eigenvectors(first, k)) <= 1e-12) ++first;
      CHECK(d.eigenvectors(first, k) > 0);
    }
    const auto again = eig_sym(m);
    CHECK(d.eigenvectors == again.eigenvectors);
  }

  TEST_CASE("rejects non-symmetric and non-square input") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 0, 1;
    CHECK_THROWS_AS(eig_sym(m), ValidationError);
    CHECK_THROWS_AS(eig_sym(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
  }

  TEST_CASE("spectral norm") {
    CHECK(spectral_norm(Eigen::MatrixXd::Zero(4, 4)) == 0.0);
    CHECK(spectral_norm(-2.0 * Eigen::MatrixXd::Identity(4, 4)) == doctest::Approx(2.0));
    Eigen::VectorXd u(5);
    u << 1, -2, 0.5, 3, 0;
    CHECK(spectral_norm(u * u.transpose()) == doctest::Approx(u.squaredNorm()).epsilon(1e-13));
  }
}
