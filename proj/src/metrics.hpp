#pragma once
// Forecast evaluation: calibration error over PIT counts, sharpness, NLL,
// RMSE, reliability-curve export, and the feature-distance diagnostic. All
// metrics are computed in raw (de-standardized) target units.

#include <cstddef>
#include <string>
#include <vector>

#include "regressor.hpp"
#include "tensor.hpp"

namespace densreg {

struct ForecastSet {
  std::vector<PredictiveGaussian> forecasts;
  std::vector<double> realizations;
};

// m equally spaced confidence levels p_j = j/(m+1), j = 1..m.
std::vector<double> default_thresholds(size_t m = 20);

// PIT values F_i(y_i): the forecast CDF evaluated at the realization.
std::vector<double> pit_values(const ForecastSet& fs);

// Σ_j (p_j − |{i : F_i(y_i) ≤ p_j}|/n)².
double calibration_score(const ForecastSet& fs,
                         const std::vector<double>& thresholds);

// Same scores computed from precomputed PIT values (ties use ≤).
double calibration_from_pit(const std::vector<double>& pit,
                            const std::vector<double>& thresholds);

// sqrt of the mean forecast variance.
double sharpness(const ForecastSet& fs);

double nll_metric(const ForecastSet& fs);
double rmse(const ForecastSet& fs);

struct ReliabilityPoint {
  double threshold = 0.0;
  double fraction = 0.0;  // empirical share of PIT values ≤ threshold
};

std::vector<ReliabilityPoint> reliability_curve(
    const ForecastSet& fs, const std::vector<double>& thresholds);

std::vector<ReliabilityPoint> reliability_from_pit(
    const std::vector<double>& pit, const std::vector<double>& thresholds);

// Mean L2 distance from z to the rows of train_features.
double feature_distance(const double* z, size_t dim, const Matrix& train_features);

struct MetricsReport {
  std::string split;  // "iid" or "ood"
  size_t n = 0;
  double nll = 0.0;
  double rmse = 0.0;
  double cal = 0.0;
  double sharp = 0.0;
  std::vector<ReliabilityPoint> reliability;
};

MetricsReport compute_metrics(const ForecastSet& fs, const std::string& split_label,
                              const std::vector<double>& thresholds = default_thresholds());

// "key = value" lines; value formatting round-trips doubles exactly.
std::string metrics_to_text(const MetricsReport& report);

}  // namespace densreg
