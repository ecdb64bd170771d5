#pragma once
// Dataset plumbing: the cubic toy generator, delimited-text ingestion and
// export, train-only standardization, and IID/OOD shift splits.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "regressor.hpp"
#include "tensor.hpp"

namespace densreg {

struct TabularDataset {
  Matrix X;                          // n × d features
  std::vector<double> y;             // n targets
  std::vector<std::string> columns;  // feature column names, size d
  std::string target_name = "y";
  std::string provenance;            // human-readable source tag

  size_t rows() const { return X.rows; }
  size_t dim() const { return X.cols; }
};

struct StandardizationStats {
  std::vector<double> x_mean;
  std::vector<double> x_std;
  double y_mean = 0.0;
  double y_std = 1.0;
  // Set when any column (or the target) was constant and its std replaced by 1.
  bool constant_column = false;
};

struct ShiftSplit {
  TabularDataset train;
  TabularDataset iid_test;
  TabularDataset ood_test;
};

// y = x³ + ε with ε ~ N(0, noise_std²); train and iid_test x uniform on
// [−4, 4], ood_test x uniform on the shell [−7, −4] ∪ [4, 7].
ShiftSplit generate_cubic_toy(size_t n_train, size_t n_test, uint64_t seed,
                              double noise_std = 3.0);

// Delimited text with a header row; all cells numeric. Errors name the
// offending line and column. A UTF-8 BOM and quoted header names are handled
// (the UCI wine files quote their headers).
TabularDataset load_csv(const std::string& path, const std::string& target_column,
                        char delimiter = ',');

// Inverse of load_csv: header then rows, doubles printed exactly.
void save_csv(const TabularDataset& ds, const std::string& path,
              char delimiter = ',');

// Per-column moments of the training split (population std; constant columns
// get std 1 and set the warning flag).
StandardizationStats compute_standardization(const TabularDataset& train);

TabularDataset standardize(const TabularDataset& ds,
                           const StandardizationStats& stats);

double standardize_target(double y, const StandardizationStats& stats);

// Maps a prediction made in standardized target units back to raw units:
// μ → μ·σ_y + m_y, σ² → σ²·σ_y².
PredictiveGaussian destandardize_prediction(const PredictiveGaussian& pred,
                                            const StandardizationStats& stats);

// Shuffles source_a by the seed and splits it train/iid_test with
// `train_fraction` of rows going to train; source_b becomes ood_test whole.
// Both resulting source_a parts must be non-empty.
ShiftSplit make_shift_split(const TabularDataset& source_a,
                            const TabularDataset& source_b,
                            double train_fraction, uint64_t seed);

}  // namespace densreg
