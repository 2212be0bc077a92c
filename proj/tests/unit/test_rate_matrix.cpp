#include <doctest.h>

#include <Eigen/Dense>

#include "mfg/rate_matrix.hpp"
#include "mfg/rng.hpp"

using namespace mfg;

TEST_CASE("reference generator, unmasked") {
  const RateMatrix Q = build_reference_generator(3);
  Eigen::MatrixXd expected(3, 3);
  expected << -2, 1, 1, 1, -2, 1, 1, 1, -2;
  CHECK((Q.entries - expected).cwiseAbs().maxCoeff() == 0.0);

  const RateMatrix Q2 = build_reference_generator(2);
  Eigen::MatrixXd expected2(2, 2);
  expected2 << -1, 1, 1, -1;
  CHECK((Q2.entries - expected2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reference generator, masked transition") {
  Mask mask = RateMatrix::full_mask(3);
  mask(0, 2) = false;
  const RateMatrix Q = build_reference_generator(3, mask);
  Eigen::VectorXd row0 = Q.entries.row(0);
  CHECK(row0(0) == -1.0);
  CHECK(row0(1) == 1.0);
  CHECK(row0(2) == 0.0);
  CHECK(Q.entries.row(1).sum() == 0.0);
}

TEST_CASE("reference generator, bad inputs") {
  CHECK_THROWS_AS(build_reference_generator(1), std::invalid_argument);
  Mask dead = Mask::Constant(2, 2, false);
  CHECK_THROWS_AS(build_reference_generator(2, dead), std::invalid_argument);
  CHECK_NOTHROW(build_reference_generator(2, dead, /*allow_absorbing=*/true));
}

TEST_CASE("generator validation report") {
  const RateMatrix Q = build_reference_generator(3);
  CHECK(validate_generator(Q, 0.5, 2.0).ok());

  RateMatrix bad = Q;
  bad.entries(0, 0) += 0.1;  // row sum 0.1
  const auto rep = validate_generator(bad, 0.5, 2.0);
  CHECK(!rep.ok());
  bool found_rowsum = false;
  for (const auto& v : rep.violations) found_rowsum |= (v.row == 0 && v.col == 0);
  CHECK(found_rowsum);
}

TEST_CASE("generator validation flags negative rates") {
  RateMatrix neg = build_reference_generator(3);
  neg.entries(1, 0) = -0.2;
  neg.entries(1, 1) = -0.8;  // keep the row sum at zero
  const auto rep = validate_generator(neg, 0.5, 2.0);
  bool found_sign = false;
  for (const auto& v : rep.violations)
    found_sign |= (v.row == 1 && v.col == 0 && v.what.find("negative") != std::string::npos);
  CHECK(found_sign);
}

TEST_CASE("psi matrix closed forms") {
  const RateMatrix Q3 = build_reference_generator(3);
  Eigen::MatrixXd psi0(3, 3);
  psi0 << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  CHECK((psi_matrix(0, Q3) - psi0).cwiseAbs().maxCoeff() == 0.0);

  const RateMatrix Q2 = build_reference_generator(2);
  Eigen::MatrixXd psi2(2, 2);
  psi2 << 1, -1, -1, 1;
  CHECK((psi_matrix(0, Q2) - psi2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(psi_matrix(5, Q3), std::out_of_range);
}

TEST_CASE("psi matrices are symmetric PSD and kill constants") {
  for (int m : {2, 3, 4, 5}) {
    const RateMatrix Q = build_reference_generator(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::MatrixXd psi = psi_matrix(i, Q);
      CHECK((psi - psi.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((psi * Eigen::VectorXd::Ones(m)).cwiseAbs().maxCoeff() == 0.0);
      const Eigen::VectorXd evs =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(psi).eigenvalues();
      CHECK(evs.minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("seminorm values") {
  Eigen::VectorXd z(3);
  z << 1, 2, 3;
  CHECK(seminorm_sq(0, z) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(seminorm_sq(1, Eigen::VectorXd::Constant(4, 2.5)) == 0.0);
  Eigen::VectorXd z2(3);
  z2 << 0, 1, 0;
  CHECK(seminorm_sq(1, z2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(seminorm_sq(7, z), std::out_of_range);
}

TEST_CASE("seminorm equals the quadratic form") {
  Rng rng(7);
  for (int m : {2, 3, 4}) {
    const RateMatrix Q = build_reference_generator(m);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd z(m);
      for (int k = 0; k < m; ++k) z(k) = 6.0 * rng.uniform() - 3.0;
      const int i = static_cast<int>(rng.uniform() * m);
      const double quad = z.dot(psi_matrix(i, Q) * z);
      CHECK(std::abs(seminorm_sq(i, z) - quad) <= 1e-12);
    }
  }
}

TEST_CASE("pseudo-inverse action on basis differences") {
  Eigen::VectorXd v = psi_pinv_apply(0, 1, 3);
  CHECK(v(0) == doctest::Approx(-1.0 / 3).epsilon(1e-15));
  CHECK(v(1) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(v(2) == doctest::Approx(-1.0 / 3).epsilon(1e-15));

  Eigen::VectorXd v2 = psi_pinv_apply(0, 1, 2);
  CHECK(v2(0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(v2(1) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(psi_pinv_apply(1, 1, 3), std::invalid_argument);

  // psi^i applied to the formula recovers e_j - e_i.
  for (int m : {2, 3, 4, 5}) {
    const RateMatrix Q = build_reference_generator(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(m);
        expected(j) = 1.0;
        expected(i) = -1.0;
        const Eigen::VectorXd got = psi_matrix(i, Q) * psi_pinv_apply(i, j, m);
        CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("pseudo-inverse agrees with the numerical pinv and fixes the zero-sum space") {
  Rng rng(11);
  for (int m : {2, 3, 4}) {
    const RateMatrix Q = build_reference_generator(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::MatrixXd psi = psi_matrix(i, Q);
      const Eigen::MatrixXd pinv = psi.completeOrthogonalDecomposition().pseudoInverse();
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e(j) = 1.0;
        e(i) = -1.0;
        CHECK((pinv * e - psi_pinv_apply(i, j, m)).cwiseAbs().maxCoeff() <= 1e-12);
      }
      for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd q(m);
        for (int k = 0; k < m; ++k) q(k) = 2.0 * rng.uniform() - 1.0;
        q.array() -= q.mean();  // zero-sum vector
        CHECK((psi * (pinv * q) - q).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}
