#pragma once

// Geometry of the identified parameter space. Two parameter points are
// indistinguishable exactly when they share the covariance W W^T + sigma2 I;
// with p > q that set is C = {(W0 R, sigma0^2) : R orthogonal} -- rotations
// of the anchor only, because any sigma'^2 < sigma0^2 would force the
// low-rank part to carry full rank p. The quotient metric collapses C and
// nothing else:
//
//   d_bar([x], [y]) = min( d(x, y), d(x, C) + d(y, C) )
//
// with d the Euclidean product metric on (vec W, sigma2) -- Frobenius on the
// W block (the ambient-norm convention is standardized here). Distances to
// the orbit reduce to an orthogonal Procrustes problem with the closed-form
// solution through the singular values of W0^T W; reflections are included
// (the full orthogonal group, not just rotations).
//
// The two toy constructions at the end reproduce, over an axis-ray quotient
// and a collapsing point sequence, the failure modes that motivate this
// metric: chain pseudometrics can vanish between distinct classes, and
// functions lifted to a quotient can lose continuity.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "ppcaq/errors.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/numerics.hpp"

namespace ppcaq {

// Euclidean distance on (vec W, sigma2).
inline double param_distance(const PpcaParams& a, const PpcaParams& b) {
  if (a.p() != b.p() || a.q() != b.q())
    throw InvalidInputError("param_distance: shapes must match");
  const double dw2 = (a.w - b.w).squaredNorm();
  const double ds = a.sigma2 - b.sigma2;
  return std::sqrt(dw2 + ds * ds);
}

namespace detail {

inline void check_orbit_args(const Matrix& w, const Matrix& w0,
                             const char* where) {
  if (w.rows() != w0.rows() || w.cols() != w0.cols())
    throw InvalidInputError(std::string(where) + ": shapes must match");
  if (w.cols() < 1 || w.rows() < 1)
    throw InvalidInputError(std::string(where) + ": empty matrices");
  if (!w.allFinite() || !w0.allFinite())
    throw InvalidInputError(std::string(where) + ": non-finite entries");
}

// The orthogonal matrix maximizing tr(R^T w0^T w): R* = U V^T from the SVD
// w0^T w = U S V^T. If singular values repeat the maximizer is not unique,
// but every valid choice attains the same minimum distance.
inline Matrix optimal_orbit_rotation(const Matrix& w, const Matrix& w0) {
  Eigen::JacobiSVD<Matrix> svd(w0.transpose() * w,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

// min over orthogonal q x q R of ||w - w0 R||_F. The minimum equals
// sqrt(||w||^2 + ||w0||^2 - 2 * sum of singular values of w0^T w), but that
// arrangement cancels catastrophically near zero (an on-orbit w comes back
// ~1e-7 instead of 0), so the same closed form is evaluated at its attaining
// rotation instead: ||w - w0 R*||_F, which is exact at zero.
inline double procrustes_distance(const Matrix& w, const Matrix& w0) {
  detail::check_orbit_args(w, w0, "procrustes_distance");
  return (w - w0 * detail::optimal_orbit_rotation(w, w0)).norm();
}

// The point of the orbit {w0 R} closest to w. Needed by callers that must
// move relative to the orbit (the sup-ratio projection), not just measure
// distance to it.
inline Matrix nearest_orbit_point(const Matrix& w, const Matrix& w0) {
  detail::check_orbit_args(w, w0, "nearest_orbit_point");
  return w0 * detail::optimal_orbit_rotation(w, w0);
}

// The closed set C of all parameters sharing the anchor's covariance,
// with that covariance cached.
class IdentifiedSet {
 public:
  explicit IdentifiedSet(PpcaParams theta0)
      : theta0_(std::move(theta0)), cov_(assemble_covariance(theta0_)) {}

  const PpcaParams& theta0() const { return theta0_; }
  const SymMatrix& true_covariance() const { return cov_; }

 private:
  PpcaParams theta0_;
  SymMatrix cov_;
};

// d(theta, C). Since p > q pins sigma'^2 = sigma0^2 on C, this is the
// Procrustes distance on the W block combined with the sigma2 gap.
inline double distance_to_identified_set(const PpcaParams& theta,
                                         const IdentifiedSet& c) {
  if (theta.p() != c.theta0().p() || theta.q() != c.theta0().q())
    throw InvalidInputError(
        "distance_to_identified_set: shapes must match the anchor");
  const double dw = procrustes_distance(theta.w, c.theta0().w);
  const double ds = theta.sigma2 - c.theta0().sigma2;
  return std::sqrt(dw * dw + ds * ds);
}

// A parameter point together with the identified set its class lives over.
struct QuotientPoint {
  PpcaParams theta;
  std::shared_ptr<const IdentifiedSet> context;
};

inline double quotient_distance(const QuotientPoint& a,
                                const QuotientPoint& b) {
  if (!a.context || !b.context)
    throw InvalidInputError("quotient_distance: missing context");
  if (a.context != b.context)
    throw InvalidInputError(
        "quotient_distance: points must share one identified set");
  const double direct = param_distance(a.theta, b.theta);
  const double through_c = distance_to_identified_set(a.theta, *a.context) +
                           distance_to_identified_set(b.theta, *b.context);
  return std::min(direct, through_c);
}

// --- Toy quotient demos -------------------------------------------------

// First-quadrant rays through the origin as equivalence classes. The chain
// pseudometric between two rays is bounded by the one-link chain through
// the scaled-down representatives x/k and y/k, which costs ||x - y|| / k:
// arbitrarily small for any two rays, so the pseudometric collapses to 0
// between genuinely distinct classes.
inline double ray_chain_bound(const Eigen::Vector2d& x,
                              const Eigen::Vector2d& y, long k) {
  if (k < 1) throw InvalidInputError("ray_chain_bound: need k >= 1");
  if (!(x.array() >= 0.0).all() || !(y.array() >= 0.0).all())
    throw InvalidInputError(
        "ray_chain_bound: points must have nonnegative coordinates");
  if (x.isZero(0.0) || y.isZero(0.0))
    throw InvalidInputError("ray_chain_bound: the origin is not in the space");
  return (x - y).norm() / double(k);
}

struct LiftSequenceRow {
  long n = 0;
  double distance = 0.0;  // quotient-metric distance from [c_n] to [origin]
  double value = 0.0;     // lifted function value at [c_n]
};

// The collapsing-pairs construction: points a_n = (1/n, 0),
// b_n = (1/n, 1 - 1/n), c_n = (1/n, 1) with a_n ~ b_n glued, and a function
// g that is 1 at c_n and 0 elsewhere. The quotient-metric distance from
// [c_n] to the origin's class is
//
//   min( d(c_n, 0), d(c_n, b_n) + d(a_n, 0) ) = min( sqrt(1/n^2 + 1), 2/n ),
//
// which tends to 0, while the lifted value stays at 1: the lift of g is not
// continuous at the origin. The chain legs are evaluated in cancellation-
// free form (both equal 1/n exactly) rather than by subtracting nearly
// equal coordinates.
inline std::vector<LiftSequenceRow> lift_discontinuity_sequence(long n_max) {
  if (n_max < 2)
    throw InvalidInputError("lift_discontinuity_sequence: need n_max >= 2");
  std::vector<LiftSequenceRow> rows;
  rows.reserve(std::size_t(n_max - 1));
  for (long n = 2; n <= n_max; ++n) {
    const double inv = 1.0 / double(n);
    const double direct = std::sqrt(inv * inv + 1.0);  // d(c_n, origin)
    const double through_class = inv + inv;  // d(c_n, b_n) + d(a_n, origin)
    rows.push_back({n, std::min(direct, through_class), 1.0});
  }
  return rows;
}

}  // namespace ppcaq
