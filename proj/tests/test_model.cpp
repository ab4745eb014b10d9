#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ppcaq/errors.hpp"
#include "ppcaq/mle.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/rng.hpp"
#include "test_util.hpp"

using namespace ppcaq;
using ppcaq::testutil::random_matrix;
using ppcaq::testutil::random_orthogonal;
using ppcaq::testutil::random_params;

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(PpcaParams(Matrix::Zero(2, 2), 1.0), InvalidInputError);
  CHECK_THROWS_AS(PpcaParams(Matrix::Zero(3, 0), 1.0), InvalidInputError);
  CHECK_THROWS_AS(PpcaParams(Matrix::Zero(3, 1), 0.0), InvalidInputError);
  CHECK_THROWS_AS(PpcaParams(Matrix::Zero(3, 1), -0.5), InvalidInputError);
  Matrix bad = Matrix::Zero(3, 1);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(PpcaParams(bad, 1.0), InvalidInputError);
  const PpcaParams ok(Matrix::Zero(3, 1), 2.0);
  CHECK(ok.p() == 3);
  CHECK(ok.q() == 1);
}

TEST_CASE("covariance assembly on closed-form cases") {
  const SymMatrix iso =
      assemble_covariance(PpcaParams(Matrix::Zero(2, 1), 1.0));
  CHECK(iso.entries() == Matrix::Identity(2, 2));

  Matrix ones(2, 1);
  ones << 1.0, 1.0;
  const SymMatrix spike = assemble_covariance(PpcaParams(ones, 1.0));
  Matrix expected(2, 2);
  expected << 2.0, 1.0, 1.0, 2.0;
  CHECK((spike.entries() - expected).cwiseAbs().maxCoeff() < 1e-15);

  Matrix e1(2, 1);
  e1 << 1.0, 0.0;
  const SymMatrix axis = assemble_covariance(PpcaParams(e1, 0.5));
  expected << 1.5, 0.0, 0.0, 0.5;
  CHECK((axis.entries() - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("standard normal density at the origin") {
  const PpcaParams theta(Matrix::Zero(2, 1), 1.0);
  CHECK(log_density(Vector::Zero(2), theta) ==
        Catch::Approx(-std::log(2.0 * std::numbers::pi)).margin(1e-14));
}

TEST_CASE("log-density is invariant to rotating the factor loadings") {
  RngStream stream(404);
  for (int rep = 0; rep < 100; ++rep) {
    const Index p = 2 + static_cast<Index>(stream.next_u64() % 6);
    const Index q = 1 + static_cast<Index>(stream.next_u64() % (p - 1));
    const PpcaParams theta = random_params(p, q, stream);
    const Matrix r = random_orthogonal(q, stream);
    const PpcaParams rotated(Matrix(theta.w * r), theta.sigma2);
    Vector x(p);
    for (Index i = 0; i < p; ++i) x(i) = stream.gaussian();
    REQUIRE(std::abs(log_density(x, theta) - log_density(x, rotated)) <=
            1e-9);
  }
}

TEST_CASE("low-rank density path matches the dense path") {
  RngStream stream(11);
  const PpcaParams theta(random_matrix(6, 2, stream), 0.8);
  for (int rep = 0; rep < 20; ++rep) {
    Vector x(6);
    for (Index i = 0; i < 6; ++i) x(i) = stream.gaussian();
    CHECK(log_density(x, theta, DensityPath::LowRank) ==
          Catch::Approx(log_density(x, theta, DensityPath::Dense))
              .margin(1e-10));
  }
}

TEST_CASE("likelihood of duplicated rows scales linearly") {
  RngStream stream(31);
  const PpcaParams theta = random_params(4, 2, stream);
  Vector x(4);
  for (Index i = 0; i < 4; ++i) x(i) = stream.gaussian();
  const double single = log_density(x, theta);
  for (Index k : {2, 5, 17}) {
    Matrix rows(k, 4);
    for (Index r = 0; r < k; ++r) rows.row(r) = x.transpose();
    const Dataset data(rows, GeneratorSpec::iid(), 0);
    const LogLikSummary s = log_likelihood(data, theta);
    CHECK(s.total_loglik ==
          Catch::Approx(double(k) * single).epsilon(1e-12));
  }
}

TEST_CASE("total log-likelihood matches a naive per-row loop") {
  RngStream stream(77);
  const PpcaParams theta = random_params(5, 2, stream);
  const Dataset data = sample_iid(theta, 200, 909);
  const LogLikSummary s = log_likelihood(data, theta, true);
  REQUIRE(s.per_point.has_value());
  REQUIRE(s.per_point->size() == 200);
  double naive = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const double li = log_density(data.rows().row(i).transpose(), theta,
                                  DensityPath::Dense);
    naive += li;
    REQUIRE(std::abs((*s.per_point)(i) - li) <= 1e-9);
  }
  CHECK(std::abs(s.total_loglik - naive) <= 1e-9 * 200);
  CHECK(std::abs(s.total_loglik - s.per_point->sum()) <= 1e-9 * 200);
}

TEST_CASE("trace-form likelihood equals the per-row sum") {
  RngStream stream(19);
  const PpcaParams theta = random_params(5, 2, stream);
  const Dataset data = sample_iid(theta, 300, 2222);
  const SymMatrix s_x = sample_covariance(data);
  const double from_rows = log_likelihood(data, theta).total_loglik;
  const double from_cov = log_likelihood_from_covariance(s_x, data.n(), theta);
  CHECK(std::abs(from_rows - from_cov) <=
        1e-9 * std::max(1.0, std::abs(from_rows)));
}

TEST_CASE("likelihood ratio at the same parameters is exactly zero") {
  RngStream stream(5);
  const PpcaParams theta = random_params(4, 1, stream);
  const Dataset data = sample_iid(theta, 50, 321);
  CHECK(log_likelihood_ratio(data, theta, theta) == 0.0);
}

TEST_CASE("likelihood ratio across a rotation vanishes") {
  RngStream stream(6);
  const PpcaParams theta = random_params(4, 2, stream);
  const Matrix r = random_orthogonal(2, stream);
  const PpcaParams rotated(Matrix(theta.w * r), theta.sigma2);
  const Dataset data = sample_iid(theta, 500, 808);
  CHECK(std::abs(log_likelihood_ratio(data, rotated, theta)) <= 1e-9 * 500);
}

TEST_CASE("misspecified noise loses to the truth on every seed") {
  RngStream stream(1234);
  const PpcaParams theta0 = random_params(3, 1, stream);
  const PpcaParams inflated(theta0.w, 2.0 * theta0.sigma2);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Dataset data = sample_iid(theta0, 1000, seed);
    REQUIRE(log_likelihood_ratio(data, inflated, theta0) < 0.0);
  }
}

TEST_CASE("isotropic sampler covariance approaches sigma^2 I") {
  const double sigma2 = 1.7;
  const PpcaParams theta(Matrix::Zero(4, 1), sigma2);
  const Dataset data = sample_iid(theta, 100000, 99);
  const Matrix s_x = sample_covariance(data).entries();
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(s_x(i, i) - sigma2) <= 0.05 * sigma2);
    for (Index j = 0; j < i; ++j)
      CHECK(std::abs(s_x(i, j)) <= 0.05 * sigma2);
  }
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  RngStream stream(2);
  const PpcaParams theta = random_params(5, 2, stream);
  const Dataset a = sample_iid(theta, 64, 4242);
  const Dataset b = sample_iid(theta, 64, 4242);
  REQUIRE(a.rows() == b.rows());
  const Dataset c = sample_dependent(theta, 64, 3, 4242);
  const Dataset d = sample_dependent(theta, 64, 3, 4242);
  REQUIRE(c.rows() == d.rows());
  CHECK(a.rows() != c.rows());
}

TEST_CASE("dependent rows decorrelate beyond the window length") {
  RngStream stream(3);
  const PpcaParams theta = random_params(3, 1, stream);
  const int m = 5;
  const Dataset data = sample_dependent(theta, 100000, m, 7);
  const Index n = data.n();
  for (Index coord = 0; coord < 3; ++coord) {
    const auto col = data.rows().col(coord);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / double(n);
    const Index lag = m + 1;
    double cov = 0.0;
    for (Index i = 0; i + lag < n; ++i)
      cov += (col(i) - mean) * (col(i + lag) - mean);
    cov /= double(n - lag);
    REQUIRE(std::abs(cov / var) < 0.05);
  }
}

TEST_CASE("dependent sampling keeps the marginal covariance") {
  RngStream stream(4);
  const PpcaParams theta = random_params(3, 1, stream);
  const Matrix target = assemble_covariance(theta).entries();
  const Dataset data = sample_dependent(theta, 100000, 5, 21);
  const Matrix s_x = sample_covariance(data).entries();
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j <= i; ++j)
      REQUIRE(std::abs(s_x(i, j) - target(i, j)) <=
              0.05 * std::max(1.0, std::abs(target(i, j))));
}

TEST_CASE("window length zero reproduces the independent distribution") {
  RngStream stream(8);
  const PpcaParams theta = random_params(4, 2, stream);
  const Index n = 100000;
  const Dataset dep = sample_dependent(theta, n, 0, 31);
  const Dataset iid = sample_iid(theta, n, 32);

  // Mean log-density under the truth should agree within 3 combined SEs.
  const LogLikSummary ld = log_likelihood(dep, theta, true);
  const LogLikSummary li = log_likelihood(iid, theta, true);
  const auto stderr_of = [n](const Vector& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / double(n)) /
           std::sqrt(double(n));
  };
  const double gap =
      std::abs(ld.total_loglik / double(n) - li.total_loglik / double(n));
  const double se =
      std::hypot(stderr_of(*ld.per_point), stderr_of(*li.per_point));
  CHECK(gap <= 3.0 * se);

  // Per-coordinate variances should match the model marginals within 5%.
  const Matrix target = assemble_covariance(theta).entries();
  for (Index coord = 0; coord < 4; ++coord) {
    const auto col = dep.rows().col(coord);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / double(n);
    REQUIRE(std::abs(var - target(coord, coord)) <=
            0.05 * target(coord, coord));
  }
}

TEST_CASE("generator and dataset validation") {
  CHECK_THROWS_AS(GeneratorSpec::m_dependent(-1), InvalidInputError);
  CHECK(GeneratorSpec::m_dependent(0).m == 0);
  CHECK_THROWS_AS(Dataset(Matrix(), GeneratorSpec::iid(), 0),
                  InvalidInputError);
  RngStream stream(12);
  const PpcaParams theta = random_params(3, 1, stream);
  CHECK_THROWS_AS(sample_iid(theta, 0, 1), InvalidInputError);
  const Dataset data = sample_iid(theta, 5, 1);
  REQUIRE(data.truth().has_value());
  CHECK(data.truth()->sigma2 == theta.sigma2);
  CHECK(data.seed() == 1);
}
