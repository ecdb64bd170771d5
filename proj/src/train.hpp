#pragma once
// The three-stage training pipeline and the two baselines.
//
// Stage 1 fits extractor + head by Gaussian maximum likelihood (the plain
// predictive). Stage 2 freezes the extractor and fits a density on its
// training features; the maximum training log-density is stored as an offset
// so the modulating signal is ≤ 0 on training data regardless of feature
// dimension. Stage 3 freezes extractor and density and retrains only the head
// under the density-modulated predictive, warm-starting from stage 1.
//
// The deterministic baseline is exactly a stage-1 model; the ensemble trains
// M of those on distinct seed streams and aggregates moments at inference.

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "density.hpp"
#include "mlp.hpp"
#include "regressor.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace densreg {

enum class Method { density_regression, deterministic, ensemble };

Method method_from_string(const std::string& name);
std::string method_to_string(Method method);

struct TrainConfig {
  uint64_t seed = 0;
  std::vector<size_t> extractor_hidden{100, 100};  // ReLU widths; last = feature dim
  size_t epochs_stage1 = 200;
  size_t epochs_stage3 = 200;
  size_t batch_size = 128;
  double learning_rate = 1e-3;
  DensityFitConfig density;  // carries its own epochs/batch/lr for the flow
  size_t ensemble_members = 5;
};

// Inference-side instrumentation: how many per-input extractor passes and
// density queries prediction has performed.
struct InferenceCounters {
  std::atomic<uint64_t> extractor_passes{0};
  std::atomic<uint64_t> density_queries{0};

  InferenceCounters() = default;
  InferenceCounters(const InferenceCounters& other)
      : extractor_passes(other.extractor_passes.load()),
        density_queries(other.density_queries.load()) {}
  InferenceCounters& operator=(const InferenceCounters& other) {
    extractor_passes.store(other.extractor_passes.load());
    density_queries.store(other.density_queries.load());
    return *this;
  }
};

struct TrainedModel {
  int stage = 0;  // 1 after MLE fit, 2 after density fit, 3 after head retrain
  Mlp extractor;
  GaussianHead head;         // live head (stage-3 weights once stage 3 ran)
  GaussianHead head_stage1;  // frozen stage-1 copy kept for paired diagnostics
  DensityModel density;
  double log_p_offset = 0.0;  // max training-feature log-density
  StandardizationStats stats;
  std::vector<double> trace_stage1;
  std::vector<double> trace_stage3;  // density trace lives in density.trace
  mutable InferenceCounters counters;

  size_t feature_dim() const { return extractor.output_dim(); }
};

struct EnsembleModel {
  std::vector<TrainedModel> members;
};

// All stages take the RAW (unstandardized) training set; standardization
// stats are computed internally from it and stored on the model.
TrainedModel stage1_train(const TabularDataset& train, const TrainConfig& config);

// Fits the density on frozen training features and stores the offset.
void stage2_train_density(TrainedModel& model, const TabularDataset& train,
                          const TrainConfig& config);

// Retrains only the head under the density-modulated loss.
void stage3_retrain_head(TrainedModel& model, const TabularDataset& train,
                         const TrainConfig& config);

// Runs stages 1..stop_after_stage (default all three).
TrainedModel run_pipeline(const TabularDataset& train, const TrainConfig& config,
                          int stop_after_stage = 3);

// Continues a partially trained model through stage `stop_after_stage`,
// reproducing the uninterrupted run bit-identically for the same config.
void resume_pipeline(TrainedModel& model, const TabularDataset& train,
                     const TrainConfig& config, int stop_after_stage = 3);

EnsembleModel train_ensemble(const TabularDataset& train, const TrainConfig& config);

// Raw-unit predictions. The density-modulated form engages once stage ≥ 3;
// stage-1/2 models predict with the plain Gaussian head.
PredictiveGaussian predict(const TrainedModel& model, const double* x, size_t dim);
std::vector<PredictiveGaussian> predict_batch(const TrainedModel& model,
                                              const Matrix& X);

// Prediction through the frozen stage-1 head (paired-diagnostic path).
std::vector<PredictiveGaussian> predict_batch_stage1(const TrainedModel& model,
                                                     const Matrix& X);

PredictiveGaussian ensemble_predict(const EnsembleModel& ensemble, const double* x,
                                    size_t dim);
std::vector<PredictiveGaussian> ensemble_predict_batch(const EnsembleModel& ensemble,
                                                       const Matrix& X);

// Standardized feature vectors for raw inputs (the density's query space).
Matrix extract_features(const TrainedModel& model, const Matrix& X);

// Scalar parameters of the deployed predictor: extractor + head, plus the
// density once it participates (stage ≥ 3). The stage-1 diagnostic copy never
// counts.
size_t count_parameters(const TrainedModel& model);
size_t count_parameters(const EnsembleModel& ensemble);

// Median wall-clock seconds per batch prediction over `reps` timed runs
// (after one untimed warmup).
double time_inference(const TrainedModel& model, const Matrix& X, int reps = 30);
double time_inference(const EnsembleModel& ensemble, const Matrix& X, int reps = 30);

}  // namespace densreg
