#pragma once

// Closed-form maximum-likelihood estimation. For the sample second-moment
// matrix S = (1/n) X^T X with spectrum delta_1 >= ... >= delta_p:
//
//   sigma2_hat = mean(delta_{q+1..p})
//   W_hat col j = u_j * sqrt(max(delta_j - sigma2_hat, 0)),  j = 1..q
//
// The rotation factor in the general solution is fixed to the identity; any
// other choice lands on the same covariance and the same likelihood.
// Leading eigenvalues at or below sigma2_hat get their column zeroed and are
// reported as clamped -- that is a boundary estimate, not a failure.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ppcaq/errors.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/numerics.hpp"

namespace ppcaq {

// Second-moment matrix about zero (divisor n, matching the zero-mean
// likelihood; no mean subtraction).
inline SymMatrix sample_covariance(const Dataset& data) {
  return SymMatrix(data.rows().transpose() * data.rows() /
                   double(data.n()));
}

struct FitResult {
  PpcaParams theta_hat;
  Spectrum sample_spectrum;
  std::vector<Index> clamped;
  double loglik = 0.0;
};

inline FitResult mle_fit(const Dataset& data, Index q) {
  const Index p = data.p();
  if (q < 1 || q >= p)
    throw InvalidInputError("mle_fit: need 1 <= q < p, got q=" +
                            std::to_string(q) + " p=" + std::to_string(p));

  const SymMatrix s = sample_covariance(data);
  Spectrum spectrum = sym_eig(s);

  const double sigma2_hat = spectrum.eigenvalues.tail(p - q).mean();
  // Trailing eigenvalues of a rank-deficient second-moment matrix come back
  // as +-eps * delta_1 rather than exact zeros, so "not positive" needs the
  // usual numerical-rank floor relative to the leading eigenvalue.
  const double rank_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                            std::max(spectrum.eigenvalues(0), 0.0);
  if (!(sigma2_hat > rank_floor))
    throw DegenerateDataError(
        "mle_fit: trailing eigenvalue mean " + std::to_string(sigma2_hat) +
            " is numerically zero; data is rank-deficient",
        sigma2_hat);

  Matrix w(p, q);
  std::vector<Index> clamped;
  for (Index j = 0; j < q; ++j) {
    const double excess = spectrum.eigenvalues(j) - sigma2_hat;
    if (excess <= 0.0) {
      w.col(j).setZero();
      clamped.push_back(j);
    } else {
      w.col(j) = spectrum.eigenvectors.col(j) * std::sqrt(excess);
    }
  }

  PpcaParams theta(std::move(w), sigma2_hat);
  const double loglik = log_likelihood(data, theta).total_loglik;
  return FitResult{std::move(theta), std::move(spectrum), std::move(clamped),
                   loglik};
}

}  // namespace ppcaq
