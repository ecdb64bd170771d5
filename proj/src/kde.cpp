#include "kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "util.hpp"

namespace densreg {

namespace {

double l1_distance(const double* a, const double* b, size_t dim) {
  double sum = 0.0;
  for (size_t k = 0; k < dim; ++k) sum += std::fabs(a[k] - b[k]);
  return sum;
}

double median_pairwise_l1(const Matrix& features) {
  const size_t n = features.rows;
  const size_t d = features.cols;
  if (n < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (size_t i = 0; i < n; ++i) {
    const double* zi = &features.data[i * d];
    for (size_t j = i + 1; j < n; ++j) {
      dists.push_back(l1_distance(zi, &features.data[j * d], d));
    }
  }
  const size_t m = dists.size();
  std::nth_element(dists.begin(), dists.begin() + m / 2, dists.end());
  double med = dists[m / 2];
  if (m % 2 == 0) {
    const double lower =
        *std::max_element(dists.begin(), dists.begin() + m / 2);
    med = 0.5 * (lower + med);
  }
  return med;
}

}  // namespace

KdeModel fit_kde(const Matrix& features, double bandwidth) {
  if (features.rows == 0 || features.cols == 0) {
    fail(Status::data_error, "kde fit requires a non-empty feature matrix");
  }
  ensure_finite(features, "kde support features");
  KdeModel kde;
  kde.support = features;
  if (bandwidth > 0.0) {
    kde.bandwidth = bandwidth;
  } else {
    const double med = median_pairwise_l1(features);
    kde.bandwidth = (std::isfinite(med) && med > 1e-12) ? med : 1.0;
  }
  return kde;
}

double kde_log_prob(const KdeModel& kde, const double* z, size_t dim) {
  if (dim != kde.support.cols) {
    fail(Status::invalid_argument, "kde query dimension mismatch");
  }
  if (kde.bandwidth <= 0.0) {
    fail(Status::invalid_argument, "kde bandwidth must be positive");
  }
  const size_t n = kde.support.rows;
  const double h = kde.bandwidth;
  // exponents e_i = −‖z − z_i‖₁ / h; log p = logsumexp(e) − log n − d·log(2h)
  std::vector<double> expo(n);
  double hi = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    expo[i] = -l1_distance(z, &kde.support.data[i * dim], dim) / h;
    hi = std::max(hi, expo[i]);
  }
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += std::exp(expo[i] - hi);
  const double log_p = hi + std::log(acc) - std::log(double(n)) -
                       double(dim) * std::log(2.0 * h);
  if (!std::isfinite(log_p)) {
    fail(Status::numeric_error, "kde log-density is non-finite");
  }
  return log_p;
}

Matrix kde_log_prob_batch(const KdeModel& kde, const Matrix& z) {
  Matrix out(z.rows, 1);
  for (size_t i = 0; i < z.rows; ++i) {
    out.at(i, 0) = kde_log_prob(kde, &z.data[i * z.cols], z.cols);
  }
  return out;
}

size_t kde_param_count(const KdeModel& kde) {
  return kde.support.rows * kde.support.cols + 1;
}

}  // namespace densreg
