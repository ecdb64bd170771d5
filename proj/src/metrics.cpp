#include "metrics.hpp"

#include <cmath>
#include <cstdio>

#include "util.hpp"

namespace densreg {

namespace {

void require_forecasts(const ForecastSet& fs, const char* where) {
  if (fs.forecasts.empty()) {
    fail(Status::data_error, std::string(where) + ": empty forecast set");
  }
  if (fs.forecasts.size() != fs.realizations.size()) {
    fail(Status::data_error,
         std::string(where) + ": forecast and realization counts differ");
  }
}

void require_thresholds(const std::vector<double>& thresholds, const char* where) {
  if (thresholds.empty()) {
    fail(Status::invalid_argument, std::string(where) + ": no thresholds");
  }
  double previous = -1.0;
  for (double p : thresholds) {
    if (!(p >= 0.0 && p <= 1.0) || p <= previous) {
      fail(Status::invalid_argument,
           std::string(where) +
               ": thresholds must be strictly increasing within [0,1]");
    }
    previous = p;
  }
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

std::vector<double> default_thresholds(size_t m) {
  if (m == 0) fail(Status::invalid_argument, "default_thresholds: m must be positive");
  std::vector<double> out(m);
  for (size_t j = 1; j <= m; ++j) out[j - 1] = double(j) / double(m + 1);
  return out;
}

std::vector<double> pit_values(const ForecastSet& fs) {
  require_forecasts(fs, "pit_values");
  std::vector<double> out(fs.forecasts.size());
  for (size_t i = 0; i < fs.forecasts.size(); ++i) {
    out[i] = cdf(fs.forecasts[i], fs.realizations[i]);
  }
  return out;
}

std::vector<ReliabilityPoint> reliability_from_pit(
    const std::vector<double>& pit, const std::vector<double>& thresholds) {
  if (pit.empty()) fail(Status::data_error, "reliability_from_pit: empty PIT set");
  require_thresholds(thresholds, "reliability_from_pit");
  std::vector<ReliabilityPoint> out;
  out.reserve(thresholds.size());
  for (double p : thresholds) {
    size_t count = 0;
    for (double value : pit) {
      if (value <= p) ++count;
    }
    out.push_back({p, double(count) / double(pit.size())});
  }
  return out;
}

std::vector<ReliabilityPoint> reliability_curve(
    const ForecastSet& fs, const std::vector<double>& thresholds) {
  require_forecasts(fs, "reliability_curve");
  return reliability_from_pit(pit_values(fs), thresholds);
}

double calibration_from_pit(const std::vector<double>& pit,
                            const std::vector<double>& thresholds) {
  double total = 0.0;
  for (const ReliabilityPoint& point : reliability_from_pit(pit, thresholds)) {
    const double gap = point.threshold - point.fraction;
    total += gap * gap;
  }
  return total;
}

double calibration_score(const ForecastSet& fs,
                         const std::vector<double>& thresholds) {
  require_forecasts(fs, "calibration_score");
  return calibration_from_pit(pit_values(fs), thresholds);
}

double sharpness(const ForecastSet& fs) {
  require_forecasts(fs, "sharpness");
  double sum = 0.0;
  for (const PredictiveGaussian& f : fs.forecasts) {
    if (!(f.variance >= 0.0)) {
      fail(Status::invalid_argument, "sharpness: negative forecast variance");
    }
    sum += f.variance;
  }
  return std::sqrt(sum / double(fs.forecasts.size()));
}

double nll_metric(const ForecastSet& fs) {
  require_forecasts(fs, "nll_metric");
  double sum = 0.0;
  for (size_t i = 0; i < fs.forecasts.size(); ++i) {
    sum += nll(fs.realizations[i], fs.forecasts[i]);
  }
  return sum / double(fs.forecasts.size());
}

double rmse(const ForecastSet& fs) {
  require_forecasts(fs, "rmse");
  double sum = 0.0;
  for (size_t i = 0; i < fs.forecasts.size(); ++i) {
    const double residual = fs.realizations[i] - fs.forecasts[i].mean;
    sum += residual * residual;
  }
  return std::sqrt(sum / double(fs.forecasts.size()));
}

double feature_distance(const double* z, size_t dim, const Matrix& train_features) {
  if (train_features.rows == 0) {
    fail(Status::data_error, "feature_distance: empty reference set");
  }
  if (dim != train_features.cols) {
    fail(Status::invalid_argument, "feature_distance: dimension mismatch");
  }
  double sum = 0.0;
  for (size_t i = 0; i < train_features.rows; ++i) {
    double ssq = 0.0;
    for (size_t j = 0; j < dim; ++j) {
      const double diff = z[j] - train_features.at(i, j);
      ssq += diff * diff;
    }
    sum += std::sqrt(ssq);
  }
  return sum / double(train_features.rows);
}

MetricsReport compute_metrics(const ForecastSet& fs, const std::string& split_label,
                              const std::vector<double>& thresholds) {
  MetricsReport report;
  report.split = split_label;
  report.n = fs.forecasts.size();
  report.reliability = reliability_curve(fs, thresholds);
  double cal = 0.0;
  for (const ReliabilityPoint& point : report.reliability) {
    const double gap = point.threshold - point.fraction;
    cal += gap * gap;
  }
  report.cal = cal;
  report.sharp = sharpness(fs);
  report.nll = nll_metric(fs);
  report.rmse = rmse(fs);
  return report;
}

std::string metrics_to_text(const MetricsReport& report) {
  std::string out;
  out += "split = " + report.split + "\n";
  out += "n = " + std::to_string(report.n) + "\n";
  out += "nll = " + format_double(report.nll) + "\n";
  out += "rmse = " + format_double(report.rmse) + "\n";
  out += "cal = " + format_double(report.cal) + "\n";
  out += "sharp = " + format_double(report.sharp) + "\n";
  for (size_t j = 0; j < report.reliability.size(); ++j) {
    const std::string tag = std::to_string(j + 1);
    out += "threshold_" + tag + " = " + format_double(report.reliability[j].threshold) + "\n";
    out += "fraction_" + tag + " = " + format_double(report.reliability[j].fraction) + "\n";
  }
  return out;
}

}  // namespace densreg
