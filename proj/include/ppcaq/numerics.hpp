#pragma once

// Dense numerical kernels shared by the model and estimator layers:
// symmetric eigendecomposition with a deterministic sign convention,
// singular values, and the two low-rank identities that make likelihood
// evaluation O(p q^2) instead of O(p^3):
//
//   log det(W W^T + s2 I_p) = (p - q) log s2 + log det(s2 I_q + W^T W)
//   x^T (W W^T + s2 I_p)^{-1} x = (|x|^2 - y^T (s2 I_q + W^T W)^{-1} y) / s2,
//     with y = W^T x.
//
// Dense equivalents are kept alongside purely as test oracles.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "ppcaq/errors.hpp"

namespace ppcaq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Symmetric matrix with storage-enforced exact symmetry: the constructor
// averages m with its transpose, which is exact for already-symmetric input
// and repairs tiny asymmetries from accumulated products like X^T X.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw InvalidInputError("SymMatrix: input must be square and non-empty");
    if (!m.allFinite())
      throw InvalidInputError("SymMatrix: input has non-finite entries");
    entries_ = 0.5 * (m + m.transpose());
  }

  Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

// Eigenvalues descending, eigenvector columns paired with them.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;
};

// Deterministic symmetric eigendecomposition. Two normalizations on top of
// the solver output make the result reproducible across runs and platforms:
// eigenvalues are sorted descending, and each eigenvector is flipped so its
// first component of largest absolute value is nonnegative (ties in
// eigenvalues keep the solver's column order). Orthonormality of the
// returned basis is checked at 1e-10 and failure raises instead of
// degrading silently.
inline Spectrum sym_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.entries());
  if (solver.info() != Eigen::Success)
    throw NumericalError("sym_eig: eigensolver did not converge");

  const Index p = m.dim();
  Spectrum out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < p; ++j) {
    Index lead = 0;
    double lead_abs = -1.0;
    for (Index i = 0; i < p; ++i) {
      const double a = std::abs(out.eigenvectors(i, j));
      if (a > lead_abs) {
        lead_abs = a;
        lead = i;
      }
    }
    if (out.eigenvectors(lead, j) < 0.0)
      out.eigenvectors.col(j) = -out.eigenvectors.col(j);
  }

  const Matrix gram = out.eigenvectors.transpose() * out.eigenvectors;
  const double ortho_err =
      (gram - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-10)
    throw NumericalError("sym_eig: eigenvector basis lost orthonormality (" +
                         std::to_string(ortho_err) + ")");
  return out;
}

// Singular values of a general matrix, descending and nonnegative.
inline Vector svd_singular_values(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1)
    throw InvalidInputError("svd_singular_values: empty matrix");
  if (!a.allFinite())
    throw InvalidInputError("svd_singular_values: non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues();
}

namespace detail {

inline void check_lowrank_args(const Matrix& w, double sigma2,
                               const char* where) {
  if (w.rows() < 1)
    throw InvalidInputError(std::string(where) + ": W must have rows");
  if (!w.allFinite())
    throw InvalidInputError(std::string(where) + ": W has non-finite entries");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw InvalidInputError(std::string(where) +
                            ": sigma2 must be positive and finite");
}

// Cholesky of the q x q core matrix s2 I_q + W^T W.
inline Eigen::LLT<Matrix> core_llt(const Matrix& w, double sigma2,
                                   const char* where) {
  Matrix core = w.transpose() * w;
  core.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(core);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(where) +
                         ": Cholesky of core matrix failed");
  return llt;
}

inline double llt_logdet(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace detail

// log det(W W^T + sigma2 I_p) via the determinant lemma; never forms the
// p x p matrix.
inline double lowrank_logdet(const Matrix& w, double sigma2) {
  detail::check_lowrank_args(w, sigma2, "lowrank_logdet");
  const Index p = w.rows();
  const Index q = w.cols();
  if (q == 0) return double(p) * std::log(sigma2);
  const auto llt = detail::core_llt(w, sigma2, "lowrank_logdet");
  return double(p - q) * std::log(sigma2) + detail::llt_logdet(llt);
}

// x^T (W W^T + sigma2 I_p)^{-1} x via the Woodbury identity; clamped at 0
// so rounding can never return a negative quadratic form.
inline double lowrank_quadform(const Matrix& w, double sigma2,
                               const Vector& x) {
  detail::check_lowrank_args(w, sigma2, "lowrank_quadform");
  if (x.size() != w.rows())
    throw InvalidInputError("lowrank_quadform: x length must match rows(W)");
  if (!x.allFinite())
    throw InvalidInputError("lowrank_quadform: x has non-finite entries");
  const Index q = w.cols();
  if (q == 0) return std::max(x.squaredNorm() / sigma2, 0.0);
  const auto llt = detail::core_llt(w, sigma2, "lowrank_quadform");
  const Vector y = w.transpose() * x;
  const Vector z = llt.solve(y);
  return std::max((x.squaredNorm() - y.dot(z)) / sigma2, 0.0);
}

// Dense counterparts. Test oracles only: they form the full p x p
// covariance and factor it.
inline double dense_logdet(const Matrix& w, double sigma2) {
  detail::check_lowrank_args(w, sigma2, "dense_logdet");
  Matrix cov = w * w.transpose();
  cov.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dense_logdet: Cholesky failed");
  return detail::llt_logdet(llt);
}

inline double dense_quadform(const Matrix& w, double sigma2, const Vector& x) {
  detail::check_lowrank_args(w, sigma2, "dense_quadform");
  if (x.size() != w.rows())
    throw InvalidInputError("dense_quadform: x length must match rows(W)");
  Matrix cov = w * w.transpose();
  cov.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dense_quadform: Cholesky failed");
  return x.dot(llt.solve(x));
}

// Largest singular value of W.
inline double spectral_norm(const Matrix& w) {
  return svd_singular_values(w)(0);
}

// Largest eigenvalue of W W^T, i.e. spectral_norm(w)^2. Exposed separately
// because "spectral norm of the low-rank part" is ambiguous between the two.
inline double largest_eigenvalue_wwt(const Matrix& w) {
  const double s = spectral_norm(w);
  return s * s;
}

}  // namespace ppcaq
