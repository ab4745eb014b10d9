#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ppcaq/errors.hpp"
#include "ppcaq/numerics.hpp"
#include "ppcaq/rng.hpp"
#include "test_util.hpp"

using namespace ppcaq;
using ppcaq::testutil::random_matrix;

namespace {

SymMatrix random_symmetric(Index dim, RngStream& stream) {
  Matrix g = random_matrix(dim, dim, stream);
  return SymMatrix(Matrix(0.5 * (g + g.transpose())));
}

}  // namespace

TEST_CASE("SymMatrix rejects bad input") {
  CHECK_THROWS_AS(SymMatrix(Matrix::Zero(2, 3)), InvalidInputError);
  CHECK_THROWS_AS(SymMatrix(Matrix()), InvalidInputError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(SymMatrix(bad), InvalidInputError);
}

TEST_CASE("identity eigendecomposition") {
  const Spectrum s = sym_eig(SymMatrix(Matrix::Identity(3, 3)));
  for (Index i = 0; i < 3; ++i) CHECK(s.eigenvalues(i) == 1.0);
}

TEST_CASE("diagonal eigendecomposition is sorted descending with fixed signs") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 4.0, 1.0, 1.0;
  const Spectrum s = sym_eig(SymMatrix(d));
  CHECK(s.eigenvalues(0) == Catch::Approx(4.0).margin(1e-12));
  CHECK(s.eigenvalues(1) == Catch::Approx(1.0).margin(1e-12));
  CHECK(s.eigenvalues(2) == Catch::Approx(1.0).margin(1e-12));
  // Leading eigenvector is e1 up to sign; the convention picks +e1.
  CHECK(s.eigenvectors(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(std::abs(s.eigenvectors(1, 0)) < 1e-12);
  CHECK(std::abs(s.eigenvectors(2, 0)) < 1e-12);
}

TEST_CASE("random symmetric matrix is reconstructed from its spectrum") {
  RngStream stream(7);
  const SymMatrix a = random_symmetric(5, stream);
  const Spectrum s = sym_eig(a);
  const Matrix rebuilt =
      s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
  CHECK((rebuilt - a.entries()).norm() <= 1e-8);
  CHECK((s.eigenvectors.transpose() * s.eigenvectors - Matrix::Identity(5, 5))
            .cwiseAbs()
            .maxCoeff() <= 1e-10);
  for (Index i = 0; i + 1 < 5; ++i)
    CHECK(s.eigenvalues(i) >= s.eigenvalues(i + 1));
}

TEST_CASE("sym_eig is bitwise deterministic") {
  RngStream stream(99);
  const SymMatrix a = random_symmetric(6, stream);
  const Spectrum s1 = sym_eig(a);
  const Spectrum s2 = sym_eig(a);
  REQUIRE(s1.eigenvalues == s2.eigenvalues);
  REQUIRE(s1.eigenvectors == s2.eigenvectors);
}

TEST_CASE("singular values of simple matrices") {
  CHECK(svd_singular_values(Matrix::Zero(3, 2)).maxCoeff() == 0.0);
  const Vector id_sv = svd_singular_values(Matrix::Identity(2, 2));
  CHECK(id_sv(0) == Catch::Approx(1.0).margin(1e-14));
  CHECK(id_sv(1) == Catch::Approx(1.0).margin(1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 3.0, 4.0;
  const Vector sv = svd_singular_values(d);
  CHECK(sv(0) == Catch::Approx(4.0).margin(1e-12));
  CHECK(sv(1) == Catch::Approx(3.0).margin(1e-12));
}

TEST_CASE("log-determinant of isotropic covariances") {
  CHECK(lowrank_logdet(Matrix::Zero(3, 1), 1.0) == 0.0);
  CHECK(lowrank_logdet(Matrix::Zero(2, 1), std::exp(1.0)) ==
        Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("log-determinant of a rank-one spike") {
  Matrix w(2, 1);
  w << 1.0, 1.0;
  // Covariance [[2,1],[1,2]] has determinant 3.
  CHECK(lowrank_logdet(w, 1.0) == Catch::Approx(std::log(3.0)).margin(1e-12));
}

TEST_CASE("quadratic form basics") {
  Matrix w(2, 1);
  w << 1.0, 1.0;
  CHECK(lowrank_quadform(w, 1.0, Vector::Zero(2)) == 0.0);
  Vector x(2);
  x << 1.0, 1.0;
  CHECK(lowrank_quadform(Matrix::Zero(2, 1), 2.0, x) ==
        Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("low-rank path matches the dense path on one instance") {
  RngStream stream(11);
  const Matrix w = random_matrix(6, 2, stream);
  const double sigma2 = 0.7;
  CHECK(lowrank_logdet(w, sigma2) ==
        Catch::Approx(dense_logdet(w, sigma2)).margin(1e-8));
  for (int rep = 0; rep < 10; ++rep) {
    Vector x(6);
    for (Index i = 0; i < 6; ++i) x(i) = stream.gaussian();
    CHECK(lowrank_quadform(w, sigma2, x) ==
          Catch::Approx(dense_quadform(w, sigma2, x)).margin(1e-8));
  }
}

TEST_CASE("low-rank path matches the dense path across random instances") {
  RngStream stream(321);
  for (int rep = 0; rep < 200; ++rep) {
    const Index p = 2 + static_cast<Index>(stream.next_u64() % 19);
    const Index q_cap = std::min<Index>(5, p - 1);
    const Index q = 1 + static_cast<Index>(stream.next_u64() % q_cap);
    const Matrix w = random_matrix(p, q, stream);
    const double sigma2 = 0.1 + 2.0 * stream.uniform01();
    Vector x(p);
    for (Index i = 0; i < p; ++i) x(i) = stream.gaussian();

    const double ld_fast = lowrank_logdet(w, sigma2);
    const double ld_dense = dense_logdet(w, sigma2);
    REQUIRE(std::abs(ld_fast - ld_dense) <=
            1e-8 * std::max(1.0, std::abs(ld_dense)));

    const double qf_fast = lowrank_quadform(w, sigma2, x);
    const double qf_dense = dense_quadform(w, sigma2, x);
    REQUIRE(std::abs(qf_fast - qf_dense) <=
            1e-8 * std::max(1.0, std::abs(qf_dense)));
  }
}

TEST_CASE("low-rank covariance spectra never dip below the noise floor") {
  RngStream stream(17);
  for (int rep = 0; rep < 50; ++rep) {
    const Index p = 2 + static_cast<Index>(stream.next_u64() % 9);
    const Index q = 1 + static_cast<Index>(stream.next_u64() % (p - 1));
    const Matrix w = random_matrix(p, q, stream);
    const double sigma2 = 0.05 + stream.uniform01();
    Matrix cov = w * w.transpose();
    cov.diagonal().array() += sigma2;
    const Spectrum s = sym_eig(SymMatrix(cov));
    REQUIRE(s.eigenvalues.minCoeff() >= sigma2 - 1e-10);
  }
}

TEST_CASE("argument validation on the shared low-rank kernels") {
  const Matrix w = Matrix::Zero(3, 1);
  CHECK_THROWS_AS(lowrank_logdet(w, 0.0), InvalidInputError);
  CHECK_THROWS_AS(lowrank_logdet(w, -1.0), InvalidInputError);
  CHECK_THROWS_AS(
      lowrank_logdet(w, std::numeric_limits<double>::quiet_NaN()),
      InvalidInputError);
  Matrix bad = w;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lowrank_logdet(bad, 1.0), InvalidInputError);
  CHECK_THROWS_AS(lowrank_quadform(w, 1.0, Vector::Zero(2)),
                  InvalidInputError);
}

TEST_CASE("spectral norm agrees with the leading eigenvalue of the gram") {
  RngStream stream(23);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix w = random_matrix(5, 2, stream);
    const double sn = spectral_norm(w);
    CHECK(largest_eigenvalue_wwt(w) == Catch::Approx(sn * sn).margin(1e-10));
    const Spectrum s = sym_eig(SymMatrix(Matrix(w * w.transpose())));
    CHECK(s.eigenvalues(0) == Catch::Approx(sn * sn).epsilon(1e-10));
  }
}
