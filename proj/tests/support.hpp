#pragma once
// Shared helpers for the unit tests: random matrices, the central
// finite-difference gradient oracle, and rank statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace densreg::testing {

inline Matrix random_matrix(size_t rows, size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix out(rows, cols);
  for (double& x : out.data) x = rng.uniform(lo, hi);
  return out;
}

// Signed values bounded away from zero, for kink-free ReLU probing.
inline Matrix random_matrix_off_zero(size_t rows, size_t cols, Rng& rng,
                                     double min_abs = 0.2, double max_abs = 1.5) {
  Matrix out(rows, cols);
  for (double& x : out.data) {
    const double magnitude = rng.uniform(min_abs, max_abs);
    x = rng.uniform() < 0.5 ? -magnitude : magnitude;
  }
  return out;
}

// Central finite differences of a scalar-valued callable with respect to each
// entry of `param`. The callable must re-run the full computation.
template <typename F>
Matrix finite_difference(Matrix& param, F evaluate, double h = 1e-5) {
  Matrix grad(param.rows, param.cols);
  for (size_t i = 0; i < param.size(); ++i) {
    const double saved = param.data[i];
    param.data[i] = saved + h;
    const double up = evaluate();
    param.data[i] = saved - h;
    const double down = evaluate();
    param.data[i] = saved;
    grad.data[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double max_rel_error(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom =
        std::max({std::fabs(a.data[i]), std::fabs(b.data[i]), 1e-6});
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]) / denom);
  }
  return worst;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]));
  return worst;
}

// log|det| of a square matrix by LU decomposition with partial pivoting.
inline double log_abs_det(Matrix a) {
  const size_t n = a.rows;
  double log_det = 0.0;
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
    }
    if (pivot != col) {
      for (size_t k = 0; k < n; ++k) std::swap(a.at(col, k), a.at(pivot, k));
    }
    const double d = a.at(col, col);
    if (d == 0.0) return -std::numeric_limits<double>::infinity();
    log_det += std::log(std::fabs(d));
    for (size_t r = col + 1; r < n; ++r) {
      const double factor = a.at(r, col) / d;
      for (size_t k = col; k < n; ++k) a.at(r, k) -= factor * a.at(col, k);
    }
  }
  return log_det;
}

// Ranks with ties averaged, then Pearson correlation of the ranks.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (double(i) + double(j)) / 2.0 + 1.0;
      for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
      i = j + 1;
    }
    return rank;
  };
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  const size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace densreg::testing
