#pragma once

// Classic Nelder-Mead downhill simplex with the standard coefficients
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Derivative-free
// on purpose: the reference optimizer must not share machinery with the
// closed-form estimator it is checking. Vertex ordering breaks ties by
// insertion index, so runs are bitwise deterministic for a deterministic
// objective. NaN objective values are treated as +inf.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "ppcaq/errors.hpp"
#include "ppcaq/numerics.hpp"

namespace ppcaq {

struct NelderMeadOptions {
  int max_iterations = 0;      // 0 -> 200 * dimension
  double f_tolerance = 1e-10;  // absolute spread of simplex values
  double x_tolerance = 1e-9;   // max coordinate spread of the simplex
  double initial_step = 0.25;  // edge length when initial_steps is empty
  Vector initial_steps;        // optional per-coordinate edge lengths
};

struct NelderMeadResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

inline NelderMeadResult nelder_mead(
    const std::function<double(const Vector&)>& objective, const Vector& start,
    const NelderMeadOptions& options = {}) {
  const Index dim = start.size();
  if (dim < 1) throw InvalidInputError("nelder_mead: empty start point");
  if (!start.allFinite())
    throw InvalidInputError("nelder_mead: non-finite start point");
  if (options.initial_steps.size() != 0 &&
      options.initial_steps.size() != dim)
    throw InvalidInputError(
        "nelder_mead: initial_steps length must match dimension");

  NelderMeadResult result;
  auto eval = [&](const Vector& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  const int max_iter =
      options.max_iterations > 0 ? options.max_iterations : 200 * int(dim);

  std::vector<Vector> vertex(dim + 1, start);
  std::vector<double> value(dim + 1);
  for (Index j = 0; j < dim; ++j) {
    const double step = options.initial_steps.size() != 0
                            ? options.initial_steps(j)
                            : options.initial_step;
    vertex[j + 1](j) += step;
  }
  for (Index j = 0; j <= dim; ++j) value[j] = eval(vertex[j]);

  std::vector<int> order(dim + 1);
  std::iota(order.begin(), order.end(), 0);
  auto sort_order = [&] {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return value[a] < value[b]; });
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    sort_order();
    const int best = order.front();
    const int worst = order[dim];
    const int second_worst = order[dim - 1];

    double spread = 0.0;
    for (int j = 0; j <= dim; ++j)
      spread = std::max(
          spread,
          (vertex[j] - vertex[best]).cwiseAbs().maxCoeff());
    const bool f_done = std::isfinite(value[best]) &&
                        value[order.back()] - value[best] <=
                            options.f_tolerance;
    if (f_done || spread <= options.x_tolerance) {
      result.converged = true;
      result.iterations = iter;
      break;
    }
    result.iterations = iter + 1;

    Vector centroid = Vector::Zero(dim);
    for (int j = 0; j <= dim; ++j)
      if (j != worst) centroid += vertex[j];
    centroid /= double(dim);

    const Vector reflected = centroid + (centroid - vertex[worst]);
    const double f_reflected = eval(reflected);

    if (f_reflected < value[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - vertex[worst]);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second_worst]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }

    bool shrink = false;
    if (f_reflected < value[worst]) {
      const Vector contracted = centroid + 0.5 * (reflected - centroid);
      const double f_contracted = eval(contracted);
      if (f_contracted <= f_reflected) {
        vertex[worst] = contracted;
        value[worst] = f_contracted;
      } else {
        shrink = true;
      }
    } else {
      const Vector contracted = centroid - 0.5 * (centroid - vertex[worst]);
      const double f_contracted = eval(contracted);
      if (f_contracted < value[worst]) {
        vertex[worst] = contracted;
        value[worst] = f_contracted;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      const int keep = best;
      for (int j = 0; j <= dim; ++j) {
        if (j == keep) continue;
        vertex[j] = vertex[keep] + 0.5 * (vertex[j] - vertex[keep]);
        value[j] = eval(vertex[j]);
      }
    }
  }

  sort_order();
  result.x = vertex[order.front()];
  result.value = value[order.front()];
  return result;
}

}  // namespace ppcaq
