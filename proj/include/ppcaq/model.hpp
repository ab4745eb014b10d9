#pragma once

// The probabilistic model layer: a zero-mean gaussian with covariance
// W W^T + sigma2 I_p (latent dimension q < p), exact log-densities and
// log-likelihoods, and two exact samplers -- independent rows and an
// m-dependent row sequence whose marginals match the model exactly.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "ppcaq/errors.hpp"
#include "ppcaq/numerics.hpp"
#include "ppcaq/rng.hpp"

namespace ppcaq {

inline const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Model parameters theta = (W, sigma2) with p > q >= 1 and sigma2 > 0,
// enforced at construction.
struct PpcaParams {
  PpcaParams(Matrix w_in, double sigma2_in)
      : w(std::move(w_in)), sigma2(sigma2_in) {
    if (w.cols() < 1 || w.rows() <= w.cols())
      throw InvalidInputError(
          "PpcaParams: need p > q >= 1, got p=" + std::to_string(w.rows()) +
          " q=" + std::to_string(w.cols()));
    if (!w.allFinite())
      throw InvalidInputError("PpcaParams: W has non-finite entries");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw InvalidInputError("PpcaParams: sigma2 must be positive and finite");
  }

  Index p() const { return w.rows(); }
  Index q() const { return w.cols(); }

  Matrix w;
  double sigma2;
};

// How a dataset's rows were generated. m_dependent(m) rows are built from a
// normalized (m+1)-wide moving average of iid gaussian blocks, so each row
// is marginally exact N(0, W W^T + sigma2 I) while rows at lag <= m are
// correlated and rows at lag > m are independent. m = 0 reduces to the iid
// construction.
struct GeneratorSpec {
  enum class Kind { Iid, MDependent };

  static GeneratorSpec iid() { return {Kind::Iid, 0}; }
  static GeneratorSpec m_dependent(int m) {
    if (m < 0) throw InvalidInputError("GeneratorSpec: m must be >= 0");
    return {Kind::MDependent, m};
  }

  Kind kind = Kind::Iid;
  int m = 0;
};

// n rows of p-dimensional observations plus the provenance needed to
// reproduce them: generator descriptor, seed, and (when known) the
// generating parameters.
class Dataset {
 public:
  Dataset(Matrix rows, GeneratorSpec generator, std::uint64_t seed,
          std::optional<PpcaParams> truth = std::nullopt)
      : rows_(std::move(rows)),
        generator_(generator),
        seed_(seed),
        truth_(std::move(truth)) {
    if (rows_.rows() < 1 || rows_.cols() < 1)
      throw InvalidInputError("Dataset: need at least one row and column");
    if (!rows_.allFinite())
      throw InvalidInputError("Dataset: non-finite entries");
    if (truth_ && truth_->p() != rows_.cols())
      throw InvalidInputError(
          "Dataset: truth dimension does not match row width");
  }

  const Matrix& rows() const { return rows_; }
  Index n() const { return rows_.rows(); }
  Index p() const { return rows_.cols(); }
  const GeneratorSpec& generator() const { return generator_; }
  std::uint64_t seed() const { return seed_; }
  const std::optional<PpcaParams>& truth() const { return truth_; }

 private:
  Matrix rows_;
  GeneratorSpec generator_;
  std::uint64_t seed_;
  std::optional<PpcaParams> truth_;
};

struct LogLikSummary {
  Index n = 0;
  double total_loglik = 0.0;
  std::optional<Vector> per_point;
};

// W W^T + sigma2 I_p as an exactly-symmetric matrix. Its smallest
// eigenvalue is at least sigma2, so it is always positive definite.
inline SymMatrix assemble_covariance(const PpcaParams& theta) {
  Matrix cov = theta.w * theta.w.transpose();
  cov.diagonal().array() += theta.sigma2;
  return SymMatrix(cov);
}

enum class DensityPath { LowRank, Dense };

// Evaluates log-densities for one fixed theta, factoring the q x q core
// matrix once. This is the hot path for likelihood sums over large n.
class LogDensityEvaluator {
 public:
  explicit LogDensityEvaluator(const PpcaParams& theta)
      : w_(theta.w),
        sigma2_(theta.sigma2),
        llt_(detail::core_llt(theta.w, theta.sigma2, "LogDensityEvaluator")),
        logdet_(double(theta.p() - theta.q()) * std::log(theta.sigma2) +
                detail::llt_logdet(llt_)),
        const_term_(-0.5 * (double(theta.p()) * kLog2Pi + logdet_)) {}

  Index p() const { return w_.rows(); }
  double logdet() const { return logdet_; }

  double quadform(const Vector& x) const {
    const Vector y = w_.transpose() * x;
    const Vector z = llt_.solve(y);
    return std::max((x.squaredNorm() - y.dot(z)) / sigma2_, 0.0);
  }

  double operator()(const Vector& x) const {
    return const_term_ - 0.5 * quadform(x);
  }

 private:
  Matrix w_;
  double sigma2_;
  Eigen::LLT<Matrix> llt_;
  double logdet_;
  double const_term_;
};

// log f(x; theta). The low-rank path is the default; the dense path exists
// only so tests can cross-check it.
inline double log_density(const Vector& x, const PpcaParams& theta,
                          DensityPath path = DensityPath::LowRank) {
  if (x.size() != theta.p())
    throw InvalidInputError("log_density: x length must equal p");
  if (!x.allFinite())
    throw InvalidInputError("log_density: x has non-finite entries");
  double logdet, quad;
  if (path == DensityPath::LowRank) {
    logdet = lowrank_logdet(theta.w, theta.sigma2);
    quad = lowrank_quadform(theta.w, theta.sigma2, x);
  } else {
    logdet = dense_logdet(theta.w, theta.sigma2);
    quad = dense_quadform(theta.w, theta.sigma2, x);
  }
  return -0.5 * (double(theta.p()) * kLog2Pi + logdet + quad);
}

inline LogLikSummary log_likelihood(const Dataset& data,
                                    const PpcaParams& theta,
                                    bool keep_per_point = false) {
  if (data.p() != theta.p())
    throw InvalidInputError("log_likelihood: data width must equal p");
  const LogDensityEvaluator eval(theta);
  LogLikSummary out;
  out.n = data.n();
  if (keep_per_point) out.per_point = Vector(data.n());
  double total = 0.0;
  Vector x(data.p());
  for (Index i = 0; i < data.n(); ++i) {
    x = data.rows().row(i).transpose();
    const double value = eval(x);
    total += value;
    if (keep_per_point) (*out.per_point)(i) = value;
  }
  out.total_loglik = total;
  return out;
}

// log L(a) - log L(b) over the same data.
inline double log_likelihood_ratio(const Dataset& data, const PpcaParams& a,
                                   const PpcaParams& b) {
  return log_likelihood(data, a).total_loglik -
         log_likelihood(data, b).total_loglik;
}

// Trace form of the same quantity: for S = (1/n) sum_i x_i x_i^T,
//   sum_i log f(x_i) = -(n/2) (p log 2pi + log det Sigma + tr(Sigma^{-1} S)).
// Lets likelihood-in-theta searches precompute S once; also the identity
// tests pin the per-point sum against.
inline double log_likelihood_from_covariance(const SymMatrix& sample_cov,
                                             Index n,
                                             const PpcaParams& theta) {
  if (sample_cov.dim() != theta.p())
    throw InvalidInputError(
        "log_likelihood_from_covariance: dimension mismatch");
  if (n < 1)
    throw InvalidInputError("log_likelihood_from_covariance: need n >= 1");
  Matrix cov = theta.w * theta.w.transpose();
  cov.diagonal().array() += theta.sigma2;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log_likelihood_from_covariance: Cholesky failed");
  const double logdet = detail::llt_logdet(llt);
  const double trace_term = llt.solve(sample_cov.entries()).trace();
  return -0.5 * double(n) *
         (double(theta.p()) * kLog2Pi + logdet + trace_term);
}

// n independent draws. Per row the stream is consumed as: q latent
// gaussians, then p noise gaussians; the fill order is part of the
// determinism contract.
inline Dataset sample_iid(const PpcaParams& theta, Index n,
                          std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("sample_iid: need n >= 1");
  RngStream stream = derive_stream(seed, "ppca-iid");
  const double sigma = std::sqrt(theta.sigma2);
  Matrix rows(n, theta.p());
  Vector z(theta.q()), eps(theta.p());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < theta.q(); ++j) z(j) = stream.gaussian();
    for (Index j = 0; j < theta.p(); ++j) eps(j) = stream.gaussian();
    rows.row(i) = (theta.w * z + sigma * eps).transpose();
  }
  return Dataset(std::move(rows), GeneratorSpec::iid(), seed, theta);
}

// n rows with exact m-dependence: row i uses the normalized window sum
// (g_i + ... + g_{i+m}) / sqrt(m+1) of iid gaussian blocks (latent and
// noise blocks from separate child streams), so marginals are exactly
// N(0, W W^T + sigma2 I), lags <= m are correlated, lags > m independent.
inline Dataset sample_dependent(const PpcaParams& theta, Index n, int m,
                                std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("sample_dependent: need n >= 1");
  if (m < 0) throw InvalidInputError("sample_dependent: need m >= 0");
  RngStream latent_stream = derive_stream(seed, "ppca-mdep-latent");
  RngStream noise_stream = derive_stream(seed, "ppca-mdep-noise");
  const Index total = n + m;
  Matrix latent(total, theta.q());
  Matrix noise(total, theta.p());
  for (Index i = 0; i < total; ++i)
    for (Index j = 0; j < theta.q(); ++j)
      latent(i, j) = latent_stream.gaussian();
  for (Index i = 0; i < total; ++i)
    for (Index j = 0; j < theta.p(); ++j) noise(i, j) = noise_stream.gaussian();

  const double norm = 1.0 / std::sqrt(double(m + 1));
  const double sigma = std::sqrt(theta.sigma2);
  Matrix rows(n, theta.p());
  for (Index i = 0; i < n; ++i) {
    Vector z = norm * latent.middleRows(i, m + 1).colwise().sum().transpose();
    Vector eps = norm * noise.middleRows(i, m + 1).colwise().sum().transpose();
    rows.row(i) = (theta.w * z + sigma * eps).transpose();
  }
  return Dataset(std::move(rows), GeneratorSpec::m_dependent(m), seed, theta);
}

// Dispatch on a generator descriptor.
inline Dataset sample(const PpcaParams& theta, Index n,
                      const GeneratorSpec& generator, std::uint64_t seed) {
  if (generator.kind == GeneratorSpec::Kind::Iid)
    return sample_iid(theta, n, seed);
  return sample_dependent(theta, n, generator.m, seed);
}

}  // namespace ppcaq
