#pragma once
// Kernel density estimation with the exponential kernel under the L1 metric:
//   p(z) = (1/n) Σ_i  exp(−‖z − z_i‖₁ / h) / (2h)^d
// evaluated in log space with a max-shifted log-sum-exp so the result stays
// finite arbitrarily far from the support.

#include <cstddef>

#include "tensor.hpp"

namespace densreg {

struct KdeModel {
  Matrix support;        // n×d stored training features
  double bandwidth = 1.0;  // h > 0
};

// bandwidth ≤ 0 requests the median heuristic: the median pairwise L1
// distance between support points (fallback 1.0 when it degenerates).
KdeModel fit_kde(const Matrix& features, double bandwidth);

double kde_log_prob(const KdeModel& kde, const double* z, size_t dim);
Matrix kde_log_prob_batch(const KdeModel& kde, const Matrix& z);  // n×1

// Test-time storage: every support coordinate plus the bandwidth.
size_t kde_param_count(const KdeModel& kde);

}  // namespace densreg
