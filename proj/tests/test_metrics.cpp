#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "metrics.hpp"
#include "support.hpp"
#include "util.hpp"

using namespace densreg;
using namespace densreg::testing;

namespace {

// From-definition reimplementations kept deliberately separate from the
// library code paths: PIT via erfc, counting and moments via plain loops.
double oracle_pit(const PredictiveGaussian& f, double y) {
  return 0.5 * std::erfc(-(y - f.mean) / std::sqrt(2.0 * f.variance));
}

double oracle_calibration(const ForecastSet& fs, const std::vector<double>& ps) {
  double total = 0.0;
  for (double p : ps) {
    size_t count = 0;
    for (size_t i = 0; i < fs.forecasts.size(); ++i) {
      if (oracle_pit(fs.forecasts[i], fs.realizations[i]) <= p) ++count;
    }
    const double gap = p - double(count) / double(fs.forecasts.size());
    total += gap * gap;
  }
  return total;
}

double oracle_sharpness(const ForecastSet& fs) {
  double sum = 0.0;
  for (const PredictiveGaussian& f : fs.forecasts) sum += f.variance;
  return std::sqrt(sum / double(fs.forecasts.size()));
}

PredictiveGaussian oracle_ensemble(const std::vector<PredictiveGaussian>& ms) {
  // Second-moment form: σ² = mean(μ_i² + σ_i²) − μ², algebraically equal to
  // the spread-plus-noise form the library uses.
  double mean = 0.0, second = 0.0;
  for (const PredictiveGaussian& m : ms) {
    mean += m.mean;
    second += m.mean * m.mean + m.variance;
  }
  mean /= double(ms.size());
  second /= double(ms.size());
  return {mean, second - mean * mean};
}

ForecastSet random_forecast_set(Rng& rng, size_t n) {
  ForecastSet fs;
  for (size_t i = 0; i < n; ++i) {
    const double mean = rng.uniform(-3.0, 3.0);
    const double variance = rng.uniform(0.05, 4.0);
    fs.forecasts.push_back({mean, variance});
    fs.realizations.push_back(mean + std::sqrt(variance) * rng.normal() +
                              rng.uniform(-0.5, 0.5));
  }
  return fs;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("default thresholds are j/(m+1)") {
  const std::vector<double> ps = default_thresholds();
  REQUIRE(ps.size() == 20);
  CHECK(ps.front() == doctest::Approx(1.0 / 21.0).epsilon(1e-15));
  CHECK(ps.back() == doctest::Approx(20.0 / 21.0).epsilon(1e-15));
  for (size_t j = 0; j < ps.size(); ++j) {
    CHECK(ps[j] == doctest::Approx(double(j + 1) / 21.0).epsilon(1e-15));
  }
}

TEST_CASE("calibration hand examples") {
  const std::vector<double> ps{0.25, 0.5, 0.75};
  CHECK(calibration_from_pit({0.125, 0.375, 0.625, 0.875}, ps) == 0.0);
  CHECK(calibration_from_pit({0.25, 0.75}, ps) ==
        doctest::Approx(0.125).epsilon(1e-15));
  CHECK(calibration_from_pit({1.0, 1.0, 1.0}, {0.5}) ==
        doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("ties count as covered: the PIT comparison is <=") {
  // Forecast CDF at the mean is exactly 0.5, an exact tie at threshold 0.5.
  ForecastSet fs;
  fs.forecasts = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  fs.realizations = {0.0, 0.0, -9.0, -9.0};
  const std::vector<ReliabilityPoint> curve = reliability_curve(fs, {0.5});
  CHECK(curve[0].fraction == 1.0);  // a strict < would give 0.5
  CHECK(calibration_score(fs, {0.5}) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("reliability fractions are monotone and bounded") {
  Rng rng(701);
  const ForecastSet fs = random_forecast_set(rng, 60);
  const std::vector<ReliabilityPoint> curve =
      reliability_curve(fs, default_thresholds());
  double previous = 0.0;
  for (const ReliabilityPoint& point : curve) {
    CHECK(point.fraction >= previous);
    CHECK(point.fraction >= 0.0);
    CHECK(point.fraction <= 1.0);
    previous = point.fraction;
  }
}

TEST_CASE("all-zero PIT values saturate every fraction at one") {
  const std::vector<ReliabilityPoint> curve =
      reliability_from_pit({0.0, 0.0}, {0.25, 0.5, 0.75});
  for (const ReliabilityPoint& point : curve) CHECK(point.fraction == 1.0);
}

TEST_CASE("calibration matches the brute-force oracle on random sets") {
  Rng rng(702);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + size_t(rng.uniform() * 99.0);
    const ForecastSet fs = random_forecast_set(rng, n);
    std::vector<double> ps = default_thresholds(5 + size_t(rng.uniform() * 15.0));
    CHECK(std::fabs(calibration_score(fs, ps) - oracle_calibration(fs, ps)) <
          1e-12);
  }
}

TEST_CASE("sharpness matches the brute-force oracle and hand values") {
  Rng rng(703);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + size_t(rng.uniform() * 99.0);
    const ForecastSet fs = random_forecast_set(rng, n);
    CHECK(std::fabs(sharpness(fs) - oracle_sharpness(fs)) < 1e-12);
  }
  ForecastSet unit;
  unit.forecasts = {{0.0, 1.0}, {2.0, 1.0}};
  unit.realizations = {0.0, 0.0};
  CHECK(sharpness(unit) == doctest::Approx(1.0).epsilon(1e-15));
  ForecastSet mixed;
  mixed.forecasts = {{0.0, 1.0}, {0.0, 4.0}};
  mixed.realizations = {0.0, 0.0};
  CHECK(sharpness(mixed) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));
}

TEST_CASE("sharpness is homogeneous: scaling variances by c^2 scales it by c") {
  Rng rng(704);
  ForecastSet fs = random_forecast_set(rng, 40);
  const double base = sharpness(fs);
  const double c = 3.7;
  for (PredictiveGaussian& f : fs.forecasts) f.variance *= c * c;
  CHECK(sharpness(fs) == doctest::Approx(c * base).epsilon(1e-12));
}

TEST_CASE("ensemble aggregation matches the second-moment oracle") {
  Rng rng(705);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t m = 1 + size_t(rng.uniform() * 9.0);
    std::vector<PredictiveGaussian> members;
    for (size_t i = 0; i < m; ++i) {
      members.push_back({rng.uniform(-4.0, 4.0), rng.uniform(0.01, 5.0)});
    }
    const PredictiveGaussian ours = ensemble_aggregate(members);
    const PredictiveGaussian oracle = oracle_ensemble(members);
    CHECK(std::fabs(ours.mean - oracle.mean) < 1e-12);
    CHECK(std::fabs(ours.variance - oracle.variance) < 1e-12);
  }
}

TEST_CASE("identical ensemble members aggregate to the member itself") {
  const PredictiveGaussian member{1.3, 0.42};
  const PredictiveGaussian out =
      ensemble_aggregate({member, member, member, member, member});
  CHECK(out.mean == doctest::Approx(member.mean).epsilon(1e-15));
  CHECK(out.variance == doctest::Approx(member.variance).epsilon(1e-15));
}

TEST_CASE("ensemble disagreement inflates the aggregate variance") {
  const PredictiveGaussian a{-2.0, 0.5}, b{2.0, 0.5};
  const PredictiveGaussian out = ensemble_aggregate({a, b});
  CHECK(out.mean == 0.0);
  CHECK(out.variance == doctest::Approx(4.0 + 0.5).epsilon(1e-15));
}

TEST_CASE("nll and rmse hand values") {
  ForecastSet fs;
  fs.forecasts = {{1.0, 1.0}, {-1.0, 1.0}};
  fs.realizations = {1.0, -1.0};  // perfect means
  CHECK(rmse(fs) == 0.0);
  CHECK(nll_metric(fs) == doctest::Approx(0.9189385332046727).epsilon(1e-14));
  fs.realizations = {4.0, -5.0};  // residuals 3 and -4
  CHECK(rmse(fs) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  for (PredictiveGaussian& f : fs.forecasts) f.variance = 9.0;
  CHECK(rmse(fs) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
}

TEST_CASE("self-sampled forecasts are nearly calibrated at large n") {
  Rng rng(706);
  ForecastSet fs;
  const size_t n = 10000;
  for (size_t i = 0; i < n; ++i) {
    const double mean = rng.uniform(-3.0, 3.0);
    const double variance = rng.uniform(0.05, 4.0);
    fs.forecasts.push_back({mean, variance});
    fs.realizations.push_back(mean + std::sqrt(variance) * rng.normal());
  }
  CHECK(calibration_score(fs, default_thresholds(20)) < 0.01);
}

TEST_CASE("feature distance hand values and invariances") {
  Matrix refs(2, 1);
  refs.at(0, 0) = 0.0;
  refs.at(1, 0) = 2.0;
  const double z = 1.0;
  CHECK(feature_distance(&z, 1, refs) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix lone(1, 3);
  lone.at(0, 0) = 0.4;
  lone.at(0, 1) = -0.2;
  lone.at(0, 2) = 1.1;
  const double same[3] = {0.4, -0.2, 1.1};
  CHECK(feature_distance(same, 3, lone) == 0.0);

  Rng rng(707);
  Matrix batch = random_matrix(12, 3, rng);
  double query[3] = {0.3, -0.8, 0.1};
  const double before = feature_distance(query, 3, batch);
  const double offset[3] = {5.0, -2.0, 9.0};
  for (size_t i = 0; i < batch.rows; ++i)
    for (size_t j = 0; j < 3; ++j) batch.at(i, j) += offset[j];
  double moved[3];
  for (int j = 0; j < 3; ++j) moved[j] = query[j] + offset[j];
  CHECK(std::fabs(feature_distance(moved, 3, batch) - before) < 1e-12);
}

TEST_CASE("report text carries every metric and round-trips doubles") {
  Rng rng(708);
  const ForecastSet fs = random_forecast_set(rng, 25);
  const MetricsReport report = compute_metrics(fs, "iid");
  CHECK(report.n == 25);
  CHECK(report.cal >= 0.0);
  CHECK(report.sharp >= 0.0);
  CHECK(report.reliability.size() == 20);
  CHECK(report.cal ==
        doctest::Approx(calibration_score(fs, default_thresholds())).epsilon(1e-15));

  const std::string text = metrics_to_text(report);
  CHECK(text.find("split = iid\n") != std::string::npos);
  CHECK(text.find("n = 25\n") != std::string::npos);
  CHECK(text.find("threshold_20 = ") != std::string::npos);
  CHECK(text.find("fraction_20 = ") != std::string::npos);

  // The printed nll must parse back to the exact double.
  const size_t pos = text.find("nll = ");
  REQUIRE(pos != std::string::npos);
  const double parsed = std::strtod(text.c_str() + pos + 6, nullptr);
  CHECK(parsed == report.nll);
}

TEST_CASE("empty sets and bad thresholds are rejected") {
  ForecastSet empty;
  CHECK_THROWS_AS(calibration_score(empty, {0.5}), Error);
  CHECK_THROWS_AS(sharpness(empty), Error);
  CHECK_THROWS_AS(nll_metric(empty), Error);
  CHECK_THROWS_AS(rmse(empty), Error);

  ForecastSet fs;
  fs.forecasts = {{0.0, 1.0}};
  fs.realizations = {0.0};
  CHECK_THROWS_AS(calibration_score(fs, {}), Error);
  CHECK_THROWS_AS(calibration_score(fs, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(calibration_score(fs, {0.7, 0.2}), Error);
  CHECK_THROWS_AS(calibration_score(fs, {-0.1, 0.5}), Error);
  CHECK_THROWS_AS(calibration_score(fs, {0.5, 1.2}), Error);

  ForecastSet mismatched;
  mismatched.forecasts = {{0.0, 1.0}};
  CHECK_THROWS_AS(sharpness(mismatched), Error);

  Matrix no_refs;
  const double z = 0.0;
  CHECK_THROWS_AS(feature_distance(&z, 1, no_refs), Error);
  CHECK_THROWS_AS(ensemble_aggregate({}), Error);
}

}  // TEST_SUITE
