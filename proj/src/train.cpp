#include "train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "adam.hpp"
#include "tape.hpp"
#include "util.hpp"

namespace densreg {

namespace {

constexpr double kLog2 = 0.6931471805599453;

void validate_config(const TrainConfig& config) {
  if (config.extractor_hidden.empty()) {
    fail(Status::config_error, "train config: extractor needs at least one hidden layer");
  }
  for (size_t width : config.extractor_hidden) {
    if (width == 0) fail(Status::config_error, "train config: zero extractor width");
  }
  if (config.epochs_stage1 == 0 || config.epochs_stage3 == 0) {
    fail(Status::config_error, "train config: stage epoch counts must be positive");
  }
  if (config.batch_size == 0) {
    fail(Status::config_error, "train config: batch size must be positive");
  }
  if (!(config.learning_rate > 0.0)) {
    fail(Status::config_error, "train config: learning rate must be positive");
  }
  if (config.ensemble_members == 0) {
    fail(Status::config_error, "train config: ensemble needs at least one member");
  }
}

Matrix rows_of(const Matrix& source, const std::vector<size_t>& rows,
               size_t begin, size_t end) {
  Matrix out(end - begin, source.cols);
  for (size_t i = begin; i < end; ++i) {
    for (size_t j = 0; j < source.cols; ++j) {
      out.at(i - begin, j) = source.at(rows[i], j);
    }
  }
  return out;
}

// Shared minibatch Adam loop. `build` records the batch loss on a fresh tape
// and returns (loss id, parameter ids aligned with `params`). Returns the
// per-epoch observation-weighted mean loss trace.
std::vector<double> run_adam_epochs(
    const std::string& stage_name, size_t n_rows, size_t epochs, size_t batch_size,
    double lr, const std::vector<Matrix*>& params, Rng shuffle_rng,
    const std::function<std::pair<int, std::vector<int>>(
        Tape&, const std::vector<size_t>&, size_t, size_t)>& build) {
  AdamState adam = adam_init(params, lr);
  std::vector<size_t> order(n_rows);
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t batch = std::min(batch_size, n_rows);
  std::vector<double> trace;
  trace.reserve(epochs);
  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    for (size_t start = 0; start < n_rows; start += batch) {
      const size_t stop = std::min(start + batch, n_rows);
      Tape tape;
      const auto [loss_id, param_ids] = build(tape, order, start, stop);
      const double loss = tape.value(loss_id).data[0];
      if (!std::isfinite(loss)) {
        fail(Status::numeric_error,
             stage_name + " training diverged (non-finite loss) at epoch " +
                 std::to_string(epoch) + ", batch " + std::to_string(start / batch));
      }
      tape.backward(loss_id);
      std::vector<const Matrix*> grads;
      grads.reserve(param_ids.size());
      for (int id : param_ids) grads.push_back(&tape.grad(id));
      adam_step(adam, params, grads);
      loss_sum += loss * double(stop - start);
    }
    trace.push_back(loss_sum / double(n_rows));
  }
  return trace;
}

struct HeadLossIds {
  int loss = -1;
  int weight = -1;
  int bias = -1;
};

// Gaussian NLL (up to the log 2π constant) in the demo-code parameterization:
// loss = mean(2·log_std + ((y − μ)/exp(log_std))²).
HeadLossIds head_loss_on_tape(Tape& tape, const GaussianHead& head, int z_id,
                              int y_id, int log_p_id, int exp_log_p_id) {
  HeadLossIds ids;
  ids.weight = tape.leaf(head.weight);
  ids.bias = tape.leaf(head.bias);
  const int out = tape.bias_add(tape.matmul(z_id, ids.weight), ids.bias);
  const int s = tape.select_cols(out, 0, 1);
  const int m = tape.select_cols(out, 1, 2);
  const int shifted = log_p_id >= 0 ? tape.add(s, log_p_id) : s;
  const int log_std = tape.scale(tape.add_const(shifted, kLog2), -0.5);
  const int std_dev = tape.exp(log_std);
  const int variance = tape.square(std_dev);
  int scaled_m = tape.scale(m, -2.0);
  if (exp_log_p_id >= 0) scaled_m = tape.mul(scaled_m, exp_log_p_id);
  const int mean = tape.mul(variance, scaled_m);
  const int residual = tape.div(tape.sub(y_id, mean), std_dev);
  ids.loss = tape.mean(tape.add(tape.scale(log_std, 2.0), tape.square(residual)));
  return ids;
}

Matrix targets_as_column(const std::vector<double>& y) {
  Matrix out(y.size(), 1);
  out.data = y;
  return out;
}

void standardize_inputs_inplace(Matrix& X, const StandardizationStats& stats) {
  if (X.cols != stats.x_mean.size()) {
    fail(Status::invalid_argument, "predict: input dimension mismatch");
  }
  for (size_t i = 0; i < X.rows; ++i) {
    for (size_t j = 0; j < X.cols; ++j) {
      X.at(i, j) = (X.at(i, j) - stats.x_mean[j]) / stats.x_std[j];
    }
  }
}

std::vector<PredictiveGaussian> predict_with_head(const TrainedModel& model,
                                                  const Matrix& X,
                                                  const GaussianHead& head,
                                                  bool use_density) {
  Matrix x_std = X;
  standardize_inputs_inplace(x_std, model.stats);
  const Matrix z = mlp_forward(model.extractor, x_std);
  model.counters.extractor_passes.fetch_add(X.rows, std::memory_order_relaxed);
  const Matrix outs = head_outputs_batch(head, z);
  Matrix log_p;
  if (use_density) {
    log_p = density_log_prob_batch(model.density, z);
    model.counters.density_queries.fetch_add(X.rows, std::memory_order_relaxed);
  }
  std::vector<PredictiveGaussian> preds;
  preds.reserve(X.rows);
  for (size_t i = 0; i < X.rows; ++i) {
    const double s = outs.at(i, 0);
    const double m = outs.at(i, 1);
    const PredictiveGaussian standardized =
        use_density
            ? predictive_density(s, m, log_p.at(i, 0) - model.log_p_offset)
            : predictive_plain(s, m);
    preds.push_back(destandardize_prediction(standardized, model.stats));
  }
  return preds;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "density-regression") return Method::density_regression;
  if (name == "deterministic") return Method::deterministic;
  if (name == "ensemble") return Method::ensemble;
  fail(Status::config_error,
       "unknown method '" + name +
           "' (expected 'density-regression', 'deterministic', or 'ensemble')");
}

std::string method_to_string(Method method) {
  switch (method) {
    case Method::density_regression: return "density-regression";
    case Method::deterministic: return "deterministic";
    case Method::ensemble: return "ensemble";
  }
  fail(Status::internal, "unreachable method");
}

TrainedModel stage1_train(const TabularDataset& train, const TrainConfig& config) {
  validate_config(config);
  TrainedModel model;
  model.stats = compute_standardization(train);
  const TabularDataset std_ds = standardize(train, model.stats);

  Rng root(config.seed);
  std::vector<size_t> dims{std_ds.dim()};
  dims.insert(dims.end(), config.extractor_hidden.begin(),
              config.extractor_hidden.end());
  Rng extractor_rng = root.derive("init-extractor");
  model.extractor = make_mlp(dims, Mlp::Activation::relu, /*activate_last=*/true,
                             extractor_rng);
  Rng head_rng = root.derive("init-head");
  model.head = make_head(model.feature_dim(), head_rng);

  std::vector<Matrix*> params = model.extractor.params();
  params.push_back(&model.head.weight);
  params.push_back(&model.head.bias);

  const Matrix y = targets_as_column(std_ds.y);
  model.trace_stage1 = run_adam_epochs(
      "stage 1", std_ds.rows(), config.epochs_stage1, config.batch_size,
      config.learning_rate, params, root.derive("stage1-shuffle"),
      [&](Tape& tape, const std::vector<size_t>& order, size_t start, size_t stop) {
        const int x_id = tape.leaf(rows_of(std_ds.X, order, start, stop));
        const int y_id = tape.leaf(rows_of(y, order, start, stop));
        const MlpTapeNodes net = mlp_forward_tape(tape, x_id, model.extractor);
        const HeadLossIds ids =
            head_loss_on_tape(tape, model.head, net.output, y_id, -1, -1);
        std::vector<int> param_ids = net.param_ids;
        param_ids.push_back(ids.weight);
        param_ids.push_back(ids.bias);
        return std::make_pair(ids.loss, std::move(param_ids));
      });

  model.head_stage1 = model.head;
  model.stage = 1;
  return model;
}

void stage2_train_density(TrainedModel& model, const TabularDataset& train,
                          const TrainConfig& config) {
  if (model.stage < 1) {
    fail(Status::invalid_argument, "stage 2 requires a stage-1 model");
  }
  Matrix x_std = train.X;
  standardize_inputs_inplace(x_std, model.stats);
  const Matrix features = mlp_forward(model.extractor, x_std);
  Rng root(config.seed);
  model.density = fit_density(features, config.density, root.derive("density"));
  const Matrix log_p = density_log_prob_batch(model.density, features);
  double offset = log_p.at(0, 0);
  for (double v : log_p.data) offset = std::max(offset, v);
  model.log_p_offset = offset;
  if (model.stage < 2) model.stage = 2;
}

void stage3_retrain_head(TrainedModel& model, const TabularDataset& train,
                         const TrainConfig& config) {
  if (model.stage < 2) {
    fail(Status::invalid_argument, "stage 3 requires a stage-2 model");
  }
  validate_config(config);
  Matrix x_std = train.X;
  standardize_inputs_inplace(x_std, model.stats);
  const Matrix z = mlp_forward(model.extractor, x_std);

  // The density and extractor are frozen, so the per-row modulation is data.
  Matrix log_p = density_log_prob_batch(model.density, z);
  Matrix exp_log_p(log_p.rows, 1);
  for (size_t i = 0; i < log_p.rows; ++i) {
    const double adjusted = std::clamp(log_p.at(i, 0) - model.log_p_offset,
                                       kLogDensityClipLo, kLogDensityClipHi);
    log_p.at(i, 0) = adjusted;
    exp_log_p.at(i, 0) = std::exp(adjusted);
  }

  std::vector<double> y_std(train.y.size());
  for (size_t i = 0; i < train.y.size(); ++i) {
    y_std[i] = standardize_target(train.y[i], model.stats);
  }
  const Matrix y = targets_as_column(y_std);

  std::vector<Matrix*> params{&model.head.weight, &model.head.bias};
  Rng root(config.seed);
  model.trace_stage3 = run_adam_epochs(
      "stage 3", z.rows, config.epochs_stage3, config.batch_size,
      config.learning_rate, params, root.derive("stage3-shuffle"),
      [&](Tape& tape, const std::vector<size_t>& order, size_t start, size_t stop) {
        const int z_id = tape.leaf(rows_of(z, order, start, stop));
        const int y_id = tape.leaf(rows_of(y, order, start, stop));
        const int lp_id = tape.leaf(rows_of(log_p, order, start, stop));
        const int explp_id = tape.leaf(rows_of(exp_log_p, order, start, stop));
        const HeadLossIds ids =
            head_loss_on_tape(tape, model.head, z_id, y_id, lp_id, explp_id);
        return std::make_pair(ids.loss,
                              std::vector<int>{ids.weight, ids.bias});
      });
  model.stage = 3;
}

TrainedModel run_pipeline(const TabularDataset& train, const TrainConfig& config,
                          int stop_after_stage) {
  if (stop_after_stage < 1 || stop_after_stage > 3) {
    fail(Status::invalid_argument, "run_pipeline: stage must be 1, 2, or 3");
  }
  TrainedModel model = stage1_train(train, config);
  resume_pipeline(model, train, config, stop_after_stage);
  return model;
}

void resume_pipeline(TrainedModel& model, const TabularDataset& train,
                     const TrainConfig& config, int stop_after_stage) {
  if (stop_after_stage < 1 || stop_after_stage > 3) {
    fail(Status::invalid_argument, "resume_pipeline: stage must be 1, 2, or 3");
  }
  if (model.stage < 1) {
    fail(Status::invalid_argument, "resume_pipeline: model has not run stage 1");
  }
  if (model.stage < 2 && stop_after_stage >= 2) {
    stage2_train_density(model, train, config);
  }
  if (model.stage < 3 && stop_after_stage >= 3) {
    stage3_retrain_head(model, train, config);
  }
}

EnsembleModel train_ensemble(const TabularDataset& train, const TrainConfig& config) {
  validate_config(config);
  EnsembleModel ensemble;
  Rng root(config.seed);
  for (size_t i = 0; i < config.ensemble_members; ++i) {
    TrainConfig member_config = config;
    member_config.seed = root.derive_seed("member-" + std::to_string(i));
    ensemble.members.push_back(stage1_train(train, member_config));
  }
  return ensemble;
}

PredictiveGaussian predict(const TrainedModel& model, const double* x, size_t dim) {
  Matrix row(1, dim);
  for (size_t j = 0; j < dim; ++j) row.at(0, j) = x[j];
  return predict_batch(model, row)[0];
}

std::vector<PredictiveGaussian> predict_batch(const TrainedModel& model,
                                              const Matrix& X) {
  if (model.stage < 1) fail(Status::invalid_argument, "predict: untrained model");
  return predict_with_head(model, X, model.head, model.stage >= 3);
}

std::vector<PredictiveGaussian> predict_batch_stage1(const TrainedModel& model,
                                                     const Matrix& X) {
  if (model.stage < 1) fail(Status::invalid_argument, "predict: untrained model");
  return predict_with_head(model, X, model.head_stage1, false);
}

PredictiveGaussian ensemble_predict(const EnsembleModel& ensemble, const double* x,
                                    size_t dim) {
  Matrix row(1, dim);
  for (size_t j = 0; j < dim; ++j) row.at(0, j) = x[j];
  return ensemble_predict_batch(ensemble, row)[0];
}

std::vector<PredictiveGaussian> ensemble_predict_batch(const EnsembleModel& ensemble,
                                                       const Matrix& X) {
  if (ensemble.members.empty()) {
    fail(Status::invalid_argument, "ensemble_predict: no members");
  }
  std::vector<std::vector<PredictiveGaussian>> per_member;
  per_member.reserve(ensemble.members.size());
  for (const TrainedModel& member : ensemble.members) {
    per_member.push_back(predict_batch(member, X));
  }
  std::vector<PredictiveGaussian> out;
  out.reserve(X.rows);
  std::vector<PredictiveGaussian> column(ensemble.members.size());
  for (size_t i = 0; i < X.rows; ++i) {
    for (size_t k = 0; k < ensemble.members.size(); ++k) {
      column[k] = per_member[k][i];
    }
    out.push_back(ensemble_aggregate(column));
  }
  return out;
}

Matrix extract_features(const TrainedModel& model, const Matrix& X) {
  Matrix x_std = X;
  standardize_inputs_inplace(x_std, model.stats);
  return mlp_forward(model.extractor, x_std);
}

size_t count_parameters(const TrainedModel& model) {
  size_t count = model.extractor.param_count() + model.head.param_count();
  if (model.stage >= 3) count += density_param_count(model.density);
  return count;
}

size_t count_parameters(const EnsembleModel& ensemble) {
  size_t count = 0;
  for (const TrainedModel& member : ensemble.members) {
    count += count_parameters(member);
  }
  return count;
}

namespace {

template <typename Predict>
double median_latency(const Predict& run, int reps) {
  if (reps < 1) fail(Status::invalid_argument, "time_inference: reps must be positive");
  run();  // warmup
  std::vector<double> seconds;
  seconds.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    const auto begin = std::chrono::steady_clock::now();
    run();
    const auto end = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(end - begin).count());
  }
  std::nth_element(seconds.begin(), seconds.begin() + seconds.size() / 2,
                   seconds.end());
  return seconds[seconds.size() / 2];
}

}  // namespace

double time_inference(const TrainedModel& model, const Matrix& X, int reps) {
  return median_latency([&] { predict_batch(model, X); }, reps);
}

double time_inference(const EnsembleModel& ensemble, const Matrix& X, int reps) {
  return median_latency([&] { ensemble_predict_batch(ensemble, X); }, reps);
}

}  // namespace densreg
