#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ppcaq {

// Caller handed us something structurally wrong: shape mismatch, out-of-domain
// scalar (sigma2 <= 0, q >= p), empty input. Always a bug at the call site.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what)
      : std::invalid_argument(what) {}
};

// The data itself defeats the estimator (e.g. perfectly low-rank sample
// covariance forces sigma2_hat = 0). Carries the offending value so callers
// can report it without re-deriving.
class DegenerateDataError : public std::runtime_error {
 public:
  explicit DegenerateDataError(const std::string& what,
                               double sigma2_hat = std::nan(""))
      : std::runtime_error(what), sigma2_hat_(sigma2_hat) {}
  double sigma2_hat() const { return sigma2_hat_; }

 private:
  double sigma2_hat_;
};

// A numerical kernel failed a guard it should never fail on valid input
// (eigensolver non-convergence, Cholesky breakdown, lost orthonormality).
// We raise rather than silently degrade.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

// The reference optimizer never produced a finite objective value.
class OracleFailureError : public std::runtime_error {
 public:
  explicit OracleFailureError(const std::string& what)
      : std::runtime_error(what) {}
};

// Bad or contradictory run configuration (CLI / config file level).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble: unreadable input, unwritable output.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ppcaq
