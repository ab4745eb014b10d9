// Shared helpers for the test suite: random orthogonal matrices, dense
// grids over the small orthogonal groups, and random model parameters.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ppcaq/model.hpp"
#include "ppcaq/numerics.hpp"
#include "ppcaq/rng.hpp"

namespace ppcaq::testutil {

// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the R
// diagonal signs folded into Q so the distribution is symmetric.
inline Matrix random_orthogonal(Index dim, RngStream& stream) {
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = stream.gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

// Dense grid over O(1) = {+1, -1}.
inline std::vector<Matrix> orthogonal_grid_1d() {
  std::vector<Matrix> grid;
  Matrix plus(1, 1), minus(1, 1);
  plus(0, 0) = 1.0;
  minus(0, 0) = -1.0;
  grid.push_back(plus);
  grid.push_back(minus);
  return grid;
}

// Dense grid over O(2): `half` rotation angles, each with and without a
// reflection, so the grid covers both connected components.
inline std::vector<Matrix> orthogonal_grid_2d(int half) {
  std::vector<Matrix> grid;
  grid.reserve(2 * static_cast<std::size_t>(half));
  for (int k = 0; k < half; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / half;
    const double c = std::cos(angle), s = std::sin(angle);
    Matrix rot(2, 2);
    rot << c, -s, s, c;
    grid.push_back(rot);
    Matrix refl(2, 2);
    refl << c, s, s, -c;
    grid.push_back(refl);
  }
  return grid;
}

inline Matrix random_matrix(Index rows, Index cols, RngStream& stream,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * stream.gaussian();
  return m;
}

inline PpcaParams random_params(Index p, Index q, RngStream& stream,
                                double scale = 1.0) {
  return PpcaParams(random_matrix(p, q, stream, scale),
                    0.25 + stream.uniform01());
}

}  // namespace ppcaq::testutil
