#pragma once

// Reference maximizer for the model likelihood, used to certify the
// closed-form estimator. It searches over (vec W, log sigma2) with
// multistart Nelder-Mead on the trace form of the log-likelihood, then
// polishes the winner with a tight restart. Deliberately desk-scale only:
// the point is an independent cross-check, not performance, so p and q are
// capped and the objective goes through plain dense factorizations.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "ppcaq/errors.hpp"
#include "ppcaq/mle.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/nelder_mead.hpp"
#include "ppcaq/numerics.hpp"
#include "ppcaq/rng.hpp"

namespace ppcaq {

struct OracleResult {
  PpcaParams params;
  double loglik = 0.0;
  int restarts = 0;
  int converged_restarts = 0;
};

inline OracleResult numerical_mle_oracle(const Dataset& data, Index q,
                                         int restarts, std::uint64_t seed) {
  const Index p = data.p();
  const Index n = data.n();
  if (q < 1 || q >= p)
    throw InvalidInputError("numerical_mle_oracle: need 1 <= q < p");
  if (p > 8 || q > 3)
    throw InvalidInputError(
        "numerical_mle_oracle: desk-scale guard (p <= 8, q <= 3), got p=" +
        std::to_string(p) + " q=" + std::to_string(q));
  if (restarts < 1)
    throw InvalidInputError("numerical_mle_oracle: need restarts >= 1");

  const Matrix s = sample_covariance(data).entries();
  const double mean_var = std::max(s.trace() / double(p), 1e-12);
  const double scale = std::sqrt(mean_var);
  const Index dim = p * q + 1;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // v = [vec W (column-major); log sigma2]; returns the negative
  // log-likelihood in trace form, +inf outside the sane sigma2 range.
  auto negative_loglik = [&](const Vector& v) {
    const double log_s2 = v(dim - 1);
    if (!(std::abs(log_s2) <= 60.0)) return kInf;
    const double sigma2 = std::exp(log_s2);
    Matrix w = Eigen::Map<const Matrix>(v.data(), p, q);
    Matrix cov = w * w.transpose();
    cov.diagonal().array() += sigma2;
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) return kInf;
    const double logdet = detail::llt_logdet(llt);
    const double trace_term = llt.solve(s).trace();
    const double value =
        0.5 * double(n) * (double(p) * kLog2Pi + logdet + trace_term);
    return std::isfinite(value) ? value : kInf;
  };

  NelderMeadOptions wide;
  wide.max_iterations = 400 * int(dim);
  wide.f_tolerance = 1e-8;
  wide.x_tolerance = 1e-9;
  wide.initial_steps = Vector::Constant(dim, 0.3 * scale);
  wide.initial_steps(dim - 1) = 0.3;

  NelderMeadOptions tight = wide;
  tight.initial_steps = Vector::Constant(dim, 0.02 * scale);
  tight.initial_steps(dim - 1) = 0.02;
  tight.f_tolerance = 1e-12;
  tight.x_tolerance = 1e-11;

  Vector best_x;
  double best_value = kInf;
  int converged = 0;
  for (int r = 0; r < restarts; ++r) {
    RngStream stream = derive_stream(seed, "mle-oracle", std::uint64_t(r));
    Vector start(dim);
    for (Index j = 0; j < dim - 1; ++j) start(j) = scale * stream.gaussian();
    start(dim - 1) = std::log(mean_var) + 0.5 * stream.gaussian();

    const NelderMeadResult coarse = nelder_mead(negative_loglik, start, wide);
    const NelderMeadResult fine =
        std::isfinite(coarse.value)
            ? nelder_mead(negative_loglik, coarse.x, tight)
            : coarse;
    if (fine.converged) ++converged;
    const double candidate = std::min(coarse.value, fine.value);
    if (candidate < best_value) {
      best_value = candidate;
      best_x = fine.value <= coarse.value ? fine.x : coarse.x;
    }
  }

  if (std::isfinite(best_value)) {
    const NelderMeadResult final_polish =
        nelder_mead(negative_loglik, best_x, tight);
    if (final_polish.value < best_value) {
      best_value = final_polish.value;
      best_x = final_polish.x;
    }
  }

  if (!std::isfinite(best_value))
    throw OracleFailureError(
        "numerical_mle_oracle: no restart reached a finite objective");

  Matrix w = Eigen::Map<const Matrix>(best_x.data(), p, q);
  PpcaParams params(std::move(w), std::exp(best_x(dim - 1)));
  const double loglik = log_likelihood(data, params).total_loglik;
  return OracleResult{std::move(params), loglik, restarts, converged};
}

}  // namespace ppcaq
