#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ppcaq/errors.hpp"
#include "ppcaq/mle.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/oracle.hpp"
#include "ppcaq/rng.hpp"
#include "test_util.hpp"

using namespace ppcaq;
using ppcaq::testutil::random_params;

namespace {

Dataset dataset_from_rows(const Matrix& rows) {
  return Dataset(rows, GeneratorSpec::iid(), 0);
}

// Six axis-aligned rows whose sample covariance is exactly diag(d).
Dataset diagonal_dataset(const Vector& d) {
  const Index p = d.size();
  Matrix rows = Matrix::Zero(2 * p, p);
  for (Index j = 0; j < p; ++j) {
    const double a = std::sqrt(d(j) * double(p));
    rows(2 * j, j) = a;
    rows(2 * j + 1, j) = -a;
  }
  return dataset_from_rows(rows);
}

}  // namespace

TEST_CASE("sample covariance of a single row is the outer product") {
  Matrix rows(1, 2);
  rows << 3.0, -1.0;
  const Matrix s = sample_covariance(dataset_from_rows(rows)).entries();
  Matrix expected(2, 2);
  expected << 9.0, -3.0, -3.0, 1.0;
  CHECK((s - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample covariance of a symmetric two-point set") {
  Matrix rows(2, 2);
  rows << 1.0, 0.0, -1.0, 0.0;
  const Matrix s = sample_covariance(dataset_from_rows(rows)).entries();
  Matrix expected(2, 2);
  expected << 1.0, 0.0, 0.0, 0.0;
  CHECK((s - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample covariance converges to the model covariance") {
  RngStream stream(61);
  const PpcaParams theta = random_params(4, 2, stream);
  const Dataset data = sample_iid(theta, 100000, 5150);
  const Matrix target = assemble_covariance(theta).entries();
  const Matrix s = sample_covariance(data).entries();
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j <= i; ++j)
      REQUIRE(std::abs(s(i, j) - target(i, j)) <=
              0.05 * std::max(1.0, std::abs(target(i, j))));
}

TEST_CASE("closed-form fit on a known diagonal spectrum") {
  Vector d(3);
  d << 4.0, 1.0, 1.0;
  const FitResult fit = mle_fit(diagonal_dataset(d), 1);
  CHECK(fit.theta_hat.sigma2 == Catch::Approx(1.0).margin(1e-12));
  CHECK(fit.clamped.empty());
  // Loading column is sqrt(4 - 1) times the +e1 eigenvector.
  CHECK(fit.theta_hat.w(0, 0) ==
        Catch::Approx(std::sqrt(3.0)).margin(1e-10));
  CHECK(std::abs(fit.theta_hat.w(1, 0)) < 1e-10);
  CHECK(std::abs(fit.theta_hat.w(2, 0)) < 1e-10);
}

TEST_CASE("isotropic data clamps every factor") {
  Vector d = Vector::Constant(4, 2.5);
  const FitResult fit = mle_fit(diagonal_dataset(d), 2);
  CHECK(fit.theta_hat.sigma2 == Catch::Approx(2.5).margin(1e-12));
  CHECK(fit.clamped.size() == 2);
  CHECK(fit.theta_hat.w.norm() == 0.0);
}

TEST_CASE("fitted covariance spectrum interleaves as expected") {
  RngStream stream(71);
  const PpcaParams theta = random_params(5, 2, stream, 1.5);
  const Dataset data = sample_iid(theta, 2000, 99);
  const FitResult fit = mle_fit(data, 2);
  REQUIRE(fit.clamped.empty());

  const Spectrum model_spec =
      sym_eig(assemble_covariance(fit.theta_hat));
  const Vector& sample_eigs = fit.sample_spectrum.eigenvalues;
  // Leading q eigenvalues are reproduced exactly; the rest collapse to
  // the fitted noise level.
  for (Index j = 0; j < 2; ++j)
    REQUIRE(std::abs(model_spec.eigenvalues(j) - sample_eigs(j)) <= 1e-8);
  for (Index j = 2; j < 5; ++j)
    REQUIRE(std::abs(model_spec.eigenvalues(j) - fit.theta_hat.sigma2) <=
            1e-8);
}

TEST_CASE("reported log-likelihood matches the trace identity") {
  RngStream stream(81);
  for (int rep = 0; rep < 10; ++rep) {
    const PpcaParams theta = random_params(5, 2, stream, 1.5);
    const Dataset data = sample_iid(theta, 500, 1000 + rep);
    const FitResult fit = mle_fit(data, 2);
    if (!fit.clamped.empty()) continue;
    const double trace_form = log_likelihood_from_covariance(
        sample_covariance(data), data.n(), fit.theta_hat);
    REQUIRE(std::abs(fit.loglik - trace_form) <= 1e-9 * 5);
    const double row_form = log_likelihood(data, fit.theta_hat).total_loglik;
    REQUIRE(std::abs(fit.loglik - row_form) <=
            1e-9 * std::max(1.0, std::abs(row_form)));
  }
}

TEST_CASE("fit is bitwise reproducible") {
  RngStream stream(91);
  const PpcaParams theta = random_params(4, 2, stream);
  const Dataset data = sample_iid(theta, 300, 1212);
  const FitResult a = mle_fit(data, 2);
  const FitResult b = mle_fit(data, 2);
  REQUIRE(a.theta_hat.w == b.theta_hat.w);
  REQUIRE(a.theta_hat.sigma2 == b.theta_hat.sigma2);
  REQUIRE(a.loglik == b.loglik);
  REQUIRE(a.clamped == b.clamped);
  REQUIRE(a.sample_spectrum.eigenvalues == b.sample_spectrum.eigenvalues);
}

TEST_CASE("q out of range is rejected") {
  RngStream stream(14);
  const PpcaParams theta = random_params(3, 1, stream);
  const Dataset data = sample_iid(theta, 10, 3);
  CHECK_THROWS_AS(mle_fit(data, 0), InvalidInputError);
  CHECK_THROWS_AS(mle_fit(data, 3), InvalidInputError);
  CHECK_THROWS_AS(mle_fit(data, 7), InvalidInputError);
}

TEST_CASE("rank-deficient data reports the degenerate noise estimate") {
  Matrix rows(1, 3);
  rows << 1.0, 2.0, 3.0;
  try {
    mle_fit(dataset_from_rows(rows), 1);
    FAIL("expected DegenerateDataError");
  } catch (const DegenerateDataError& err) {
    // The diagnostic carries the raw trailing-eigenvalue mean, which is
    // numerically zero for rank-one data.
    CHECK(std::abs(err.sigma2_hat()) < 1e-12);
  }
}

TEST_CASE("closed form dominates a multistart numerical search") {
  RngStream stream(2026);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index p = 3 + static_cast<Index>(stream.next_u64() % 3);
    const Index q = 1 + static_cast<Index>(stream.next_u64() % 2);
    const PpcaParams theta = random_params(p, q, stream);
    const Dataset data = sample_iid(theta, 120, 7000 + rep);
    const FitResult fit = mle_fit(data, q);
    const OracleResult oracle = numerical_mle_oracle(data, q, 8, 40 + rep);
    REQUIRE(fit.loglik >= oracle.loglik - 1e-6 * 120);
    ++checked;
  }
  REQUIRE(checked == 20);
}

TEST_CASE("numerical search survives a single-row dataset") {
  Matrix rows(1, 3);
  rows << 0.5, -0.25, 1.0;
  const OracleResult oracle =
      numerical_mle_oracle(dataset_from_rows(rows), 1, 4, 17);
  CHECK(std::isfinite(oracle.loglik));
  CHECK(oracle.restarts == 4);
}

TEST_CASE("closed form also dominates the search on isotropic data") {
  Vector d = Vector::Constant(3, 1.5);
  const Dataset data = diagonal_dataset(d);
  const FitResult fit = mle_fit(data, 1);
  REQUIRE(fit.clamped.size() == 1);
  const OracleResult oracle = numerical_mle_oracle(data, 1, 8, 23);
  CHECK(oracle.loglik <= fit.loglik + 1e-6 * data.n());
}
