#pragma once
// The Gaussian head and its predictive algebra: the plain heteroscedastic
// form and the density-modulated form, plus NLL, entropy, CDF and quantile.
//
// The head is a single affine map z → (s, m): column 0 is the raw
// variance-channel output s, column 1 the mean-channel output m. Both are
// unconstrained reals; positivity of the variance comes out of the algebra
// below, never from an activation.
//
// Predictive forms (log-density log_p clipped before use):
//   log_std = −½·(log 2 + log_p + s)        (plain form: log_p = 0)
//   σ²      = exp(log_std)²
//   μ       = σ²·(−2·exp(log_p)·m)          (the density cancels: μ = −m·e^{−s})

#include <cstddef>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace densreg {

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kLogDensityClipLo = -30.0;
inline constexpr double kLogDensityClipHi = 30.0;

struct GaussianHead {
  Matrix weight;  // feature_dim × 2
  Matrix bias;    // 1 × 2
  size_t param_count() const { return weight.size() + bias.size(); }
};

GaussianHead make_head(size_t feature_dim, Rng& rng);

struct PredictiveGaussian {
  double mean = 0.0;
  double variance = 1.0;
};

struct HeadOutputs {
  double s = 0.0;  // variance channel
  double m = 0.0;  // mean channel
};

HeadOutputs head_outputs(const GaussianHead& head, const double* z, size_t dim);
Matrix head_outputs_batch(const GaussianHead& head, const Matrix& z);  // n×2: (s, m)

PredictiveGaussian predictive_plain(double s, double m);
PredictiveGaussian predictive_density(double s, double m, double log_p,
                                      double clip_lo = kLogDensityClipLo,
                                      double clip_hi = kLogDensityClipHi);

// ½·log(2πσ²) + (y−μ)²/(2σ²). The training loop optimizes the equivalent
// 2·log_std + ((y−μ)/std)² form, which differs from 2·nll by the constant
// log 2π; both orderings agree.
double nll(double y, const PredictiveGaussian& pred);

// Differential entropy ½·log(2πσ²) + ½.
double entropy(const PredictiveGaussian& pred);

double cdf(const PredictiveGaussian& pred, double y);
double quantile(const PredictiveGaussian& pred, double p);  // p ∈ (0,1)

double standard_normal_quantile(double p);

// Equal-weight mixture moments across member forecasts:
//   μ = mean(μ_i);  σ² = mean((μ − μ_i)² + σ_i²).
PredictiveGaussian ensemble_aggregate(const std::vector<PredictiveGaussian>& members);

}  // namespace densreg
