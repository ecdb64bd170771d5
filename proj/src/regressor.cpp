#include "regressor.hpp"

#include <algorithm>
#include <cmath>

#include "util.hpp"

namespace densreg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

void require_positive_variance(const PredictiveGaussian& pred, const char* where) {
  if (!(pred.variance > 0.0) || !std::isfinite(pred.variance)) {
    fail(Status::invalid_argument,
         std::string(where) + ": predictive variance must be positive and finite");
  }
}

}  // namespace

GaussianHead make_head(size_t feature_dim, Rng& rng) {
  if (feature_dim == 0) fail(Status::config_error, "make_head: zero feature dimension");
  GaussianHead head;
  head.weight = Matrix(feature_dim, 2);
  head.bias = Matrix(1, 2);
  const double limit = std::sqrt(6.0 / double(feature_dim + 2));
  for (double& x : head.weight.data) x = rng.uniform(-limit, limit);
  return head;
}

HeadOutputs head_outputs(const GaussianHead& head, const double* z, size_t dim) {
  if (dim != head.weight.rows) {
    fail(Status::invalid_argument, "head_outputs: feature dimension mismatch");
  }
  HeadOutputs out;
  double s = head.bias.at(0, 0), m = head.bias.at(0, 1);
  for (size_t i = 0; i < dim; ++i) {
    s += z[i] * head.weight.at(i, 0);
    m += z[i] * head.weight.at(i, 1);
  }
  out.s = s;
  out.m = m;
  return out;
}

Matrix head_outputs_batch(const GaussianHead& head, const Matrix& z) {
  Matrix out = matmul(z, head.weight);
  for (size_t i = 0; i < out.rows; ++i) {
    out.at(i, 0) += head.bias.at(0, 0);
    out.at(i, 1) += head.bias.at(0, 1);
  }
  return out;
}

PredictiveGaussian predictive_plain(double s, double m) {
  const double log_std = -0.5 * (std::log(2.0) + s);
  const double std_dev = std::exp(log_std);
  const double raw_variance = std_dev * std_dev;
  PredictiveGaussian out;
  out.mean = raw_variance * (-2.0 * m);
  out.variance = std::max(raw_variance, kVarianceFloor);
  if (!std::isfinite(out.mean) || !std::isfinite(out.variance)) {
    fail(Status::numeric_error, "predictive_plain: non-finite prediction");
  }
  return out;
}

PredictiveGaussian predictive_density(double s, double m, double log_p,
                                      double clip_lo, double clip_hi) {
  const double lp = std::clamp(log_p, clip_lo, clip_hi);
  const double log_std = -0.5 * (std::log(2.0) + lp + s);
  const double std_dev = std::exp(log_std);
  const double raw_variance = std_dev * std_dev;
  PredictiveGaussian out;
  out.mean = raw_variance * (-2.0 * std::exp(lp) * m);
  out.variance = std::max(raw_variance, kVarianceFloor);
  if (!std::isfinite(out.mean) || !std::isfinite(out.variance)) {
    fail(Status::numeric_error, "predictive_density: non-finite prediction");
  }
  return out;
}

double nll(double y, const PredictiveGaussian& pred) {
  require_positive_variance(pred, "nll");
  const double residual = y - pred.mean;
  return 0.5 * (kLog2Pi + std::log(pred.variance)) +
         residual * residual / (2.0 * pred.variance);
}

double entropy(const PredictiveGaussian& pred) {
  require_positive_variance(pred, "entropy");
  return 0.5 * (kLog2Pi + std::log(pred.variance)) + 0.5;
}

double cdf(const PredictiveGaussian& pred, double y) {
  require_positive_variance(pred, "cdf");
  const double z = (y - pred.mean) / std::sqrt(pred.variance);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(Status::invalid_argument, "standard_normal_quantile: p must lie in (0,1)");
  }
  // Acklam's rational approximation, then two Newton refinements against the
  // erfc-based CDF; round-trips quantile(cdf(y)) = y to well under 1e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int iter = 0; iter < 2; ++iter) {
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.141592653589793);
    if (pdf < 1e-300) break;
    x -= err / pdf;
  }
  return x;
}

double quantile(const PredictiveGaussian& pred, double p) {
  require_positive_variance(pred, "quantile");
  return pred.mean + std::sqrt(pred.variance) * standard_normal_quantile(p);
}

PredictiveGaussian ensemble_aggregate(const std::vector<PredictiveGaussian>& members) {
  if (members.empty()) {
    fail(Status::invalid_argument, "ensemble_aggregate: no member forecasts");
  }
  const double m = double(members.size());
  double mean = 0.0;
  for (const PredictiveGaussian& member : members) mean += member.mean;
  mean /= m;
  double variance = 0.0;
  for (const PredictiveGaussian& member : members) {
    const double gap = mean - member.mean;
    variance += gap * gap + member.variance;
  }
  variance /= m;
  PredictiveGaussian out;
  out.mean = mean;
  out.variance = variance;
  return out;
}

}  // namespace densreg
