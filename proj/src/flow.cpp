#include "flow.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "adam.hpp"
#include "util.hpp"

namespace densreg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
constexpr double kLogScaleBound = 3.0;  // log-scale = 3·tanh(raw)
constexpr double kRadiusEpsilon = 1e-24;  // keeps the sqrt gradient finite at r = 0

struct HalfRanges {
  size_t keep0, keep1;    // conditioner input
  size_t trans0, trans1;  // rewritten half
};

HalfRanges ranges(const CouplingLayer& layer) {
  if (layer.transform_first) {
    return {layer.split, layer.dim, 0, layer.split};
  }
  return {0, layer.split, layer.split, layer.dim};
}

Matrix slice_cols(const Matrix& a, size_t j0, size_t j1) {
  Matrix out(a.rows, j1 - j0);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = j0; j < j1; ++j) out.at(i, j - j0) = a.at(i, j);
  return out;
}

}  // namespace

FlowModel make_flow(size_t dim, size_t coupling_layers, size_t conditioner_hidden,
                    size_t radial_layers, Rng& rng) {
  if (dim == 0) fail(Status::config_error, "make_flow: zero feature dimension");
  if (coupling_layers > 0 && dim < 2) {
    fail(Status::config_error,
         "make_flow: coupling layers need feature dimension >= 2 (use radial layers "
         "for one-dimensional features)");
  }
  if (coupling_layers > 0 && conditioner_hidden == 0) {
    fail(Status::config_error, "make_flow: conditioner hidden width must be positive");
  }
  FlowModel flow;
  flow.dim = dim;
  const size_t split = dim / 2;
  for (size_t i = 0; i < coupling_layers; ++i) {
    CouplingLayer layer;
    layer.dim = dim;
    layer.split = split;
    layer.transform_first = (i % 2 == 1);
    const HalfRanges r = ranges(layer);
    const size_t kept = r.keep1 - r.keep0;
    const size_t transformed = r.trans1 - r.trans0;
    Rng layer_rng = rng.derive("coupling-" + std::to_string(i));
    layer.conditioner = make_mlp({kept, conditioner_hidden, 2 * transformed},
                                 Mlp::Activation::tanh, false, layer_rng,
                                 /*zero_output=*/true);
    flow.couplings.push_back(std::move(layer));
  }
  for (size_t i = 0; i < radial_layers; ++i) {
    RadialLayer layer;
    layer.center = Matrix(1, dim);
    layer.alpha_raw = Matrix(1, 1);
    layer.beta_raw = Matrix(1, 1);
    flow.radials.push_back(std::move(layer));
  }
  return flow;
}

FlowForward flow_forward(const FlowModel& flow, const Matrix& z) {
  if (z.cols != flow.dim) {
    fail(Status::invalid_argument, "flow_forward: feature dimension mismatch");
  }
  FlowForward out;
  out.t = z;
  out.log_det = Matrix(z.rows, 1);
  size_t layer_index = 0;
  for (const CouplingLayer& layer : flow.couplings) {
    const HalfRanges r = ranges(layer);
    const Matrix kept = slice_cols(out.t, r.keep0, r.keep1);
    const Matrix cond = mlp_forward(layer.conditioner, kept);  // n × 2u
    const size_t u = r.trans1 - r.trans0;
    for (size_t i = 0; i < out.t.rows; ++i) {
      for (size_t j = 0; j < u; ++j) {
        const double log_scale = kLogScaleBound * std::tanh(cond.at(i, j));
        const double shift = cond.at(i, u + j);
        double& cell = out.t.at(i, r.trans0 + j);
        cell = cell * std::exp(log_scale) + shift;
        out.log_det.at(i, 0) += log_scale;
      }
    }
    ensure_finite(out.t, "flow layer " + std::to_string(layer_index));
    ++layer_index;
  }
  for (const RadialLayer& layer : flow.radials) {
    const double alpha = stable_softplus(layer.alpha_raw.data[0]);
    const double beta = stable_softplus(layer.beta_raw.data[0]) - alpha;
    const double d = double(flow.dim);
    for (size_t i = 0; i < out.t.rows; ++i) {
      double ssq = 0.0;
      for (size_t j = 0; j < flow.dim; ++j) {
        const double diff = out.t.at(i, j) - layer.center.at(0, j);
        ssq += diff * diff;
      }
      const double radius = std::sqrt(ssq + kRadiusEpsilon);
      const double h = 1.0 / (alpha + radius);
      const double bh = beta * h;
      const double factor = 1.0 + bh;
      for (size_t j = 0; j < flow.dim; ++j) {
        const double diff = out.t.at(i, j) - layer.center.at(0, j);
        out.t.at(i, j) += bh * diff;
      }
      out.log_det.at(i, 0) +=
          (d - 1.0) * std::log(factor) + std::log(factor - beta * radius * h * h);
    }
    ensure_finite(out.t, "flow layer " + std::to_string(layer_index));
    ++layer_index;
  }
  ensure_finite(out.log_det, "flow log-det");
  return out;
}

Matrix flow_log_prob(const FlowModel& flow, const Matrix& z) {
  const FlowForward fwd = flow_forward(flow, z);
  Matrix out(z.rows, 1);
  const double base_const = -0.5 * double(flow.dim) * kLog2Pi;
  for (size_t i = 0; i < z.rows; ++i) {
    double ssq = 0.0;
    for (size_t j = 0; j < flow.dim; ++j) ssq += fwd.t.at(i, j) * fwd.t.at(i, j);
    out.at(i, 0) = base_const - 0.5 * ssq + fwd.log_det.at(i, 0);
  }
  return out;
}

Matrix flow_inverse(const FlowModel& flow, const Matrix& t) {
  if (t.cols != flow.dim) {
    fail(Status::invalid_argument, "flow_inverse: dimension mismatch");
  }
  Matrix z = t;
  for (auto it = flow.radials.rbegin(); it != flow.radials.rend(); ++it) {
    const RadialLayer& layer = *it;
    const double alpha = stable_softplus(layer.alpha_raw.data[0]);
    const double beta = stable_softplus(layer.beta_raw.data[0]) - alpha;
    for (size_t i = 0; i < z.rows; ++i) {
      double ssq = 0.0;
      for (size_t j = 0; j < flow.dim; ++j) {
        const double diff = z.at(i, j) - layer.center.at(0, j);
        ssq += diff * diff;
      }
      const double big_r = std::sqrt(ssq);
      if (big_r == 0.0) continue;  // the center maps to itself
      // Solve r² + r(α + β − R) − Rα = 0 for the pre-image radius r ≥ 0.
      const double a_term = alpha + beta - big_r;
      const double radius =
          0.5 * (-a_term + std::sqrt(a_term * a_term + 4.0 * big_r * alpha));
      const double shrink = radius / big_r;
      for (size_t j = 0; j < flow.dim; ++j) {
        const double diff = z.at(i, j) - layer.center.at(0, j);
        z.at(i, j) = layer.center.at(0, j) + diff * shrink;
      }
    }
  }
  for (auto it = flow.couplings.rbegin(); it != flow.couplings.rend(); ++it) {
    const CouplingLayer& layer = *it;
    const HalfRanges r = ranges(layer);
    const Matrix kept = slice_cols(z, r.keep0, r.keep1);
    const Matrix cond = mlp_forward(layer.conditioner, kept);
    const size_t u = r.trans1 - r.trans0;
    for (size_t i = 0; i < z.rows; ++i) {
      for (size_t j = 0; j < u; ++j) {
        const double log_scale = kLogScaleBound * std::tanh(cond.at(i, j));
        const double shift = cond.at(i, u + j);
        double& cell = z.at(i, r.trans0 + j);
        cell = (cell - shift) * std::exp(-log_scale);
      }
    }
  }
  return z;
}

std::vector<Matrix*> flow_params(FlowModel& flow) {
  std::vector<Matrix*> out;
  for (CouplingLayer& layer : flow.couplings) {
    for (Matrix* p : layer.conditioner.params()) out.push_back(p);
  }
  for (RadialLayer& layer : flow.radials) {
    out.push_back(&layer.center);
    out.push_back(&layer.alpha_raw);
    out.push_back(&layer.beta_raw);
  }
  return out;
}

size_t flow_param_count(const FlowModel& flow) {
  size_t count = 0;
  for (const CouplingLayer& layer : flow.couplings) count += layer.conditioner.param_count();
  for (const RadialLayer& layer : flow.radials) {
    count += layer.center.size() + layer.alpha_raw.size() + layer.beta_raw.size();
  }
  return count;
}

FlowTapeNodes flow_loss_tape(Tape& tape, const FlowModel& flow, const Matrix& z_batch) {
  if (z_batch.cols != flow.dim) {
    fail(Status::invalid_argument, "flow_loss_tape: feature dimension mismatch");
  }
  FlowTapeNodes nodes;
  int z = tape.leaf(z_batch);
  int log_det = -1;  // n×1, accumulated lazily
  for (const CouplingLayer& layer : flow.couplings) {
    const HalfRanges r = ranges(layer);
    const int kept = tape.select_cols(z, r.keep0, r.keep1);
    const int trans = tape.select_cols(z, r.trans0, r.trans1);
    const MlpTapeNodes cond = mlp_forward_tape(tape, kept, layer.conditioner);
    for (int id : cond.param_ids) nodes.param_ids.push_back(id);
    const size_t u = r.trans1 - r.trans0;
    const int log_scale =
        tape.scale(tape.tanh(tape.select_cols(cond.output, 0, u)), kLogScaleBound);
    const int shift = tape.select_cols(cond.output, u, 2 * u);
    const int rewritten = tape.add(tape.mul(trans, tape.exp(log_scale)), shift);
    z = layer.transform_first ? tape.merge_cols(rewritten, kept)
                              : tape.merge_cols(kept, rewritten);
    const int contribution = tape.row_sum(log_scale);
    log_det = log_det < 0 ? contribution : tape.add(log_det, contribution);
  }
  if (!flow.radials.empty()) {
    const int ones = tape.leaf(Matrix(z_batch.rows, 1, 1.0));
    for (const RadialLayer& layer : flow.radials) {
      const int center = tape.leaf(layer.center);
      const int alpha_raw = tape.leaf(layer.alpha_raw);
      const int beta_raw = tape.leaf(layer.beta_raw);
      nodes.param_ids.push_back(center);
      nodes.param_ids.push_back(alpha_raw);
      nodes.param_ids.push_back(beta_raw);
      const int diff = tape.bias_add(z, tape.scale(center, -1.0));
      const int radius =
          tape.sqrt(tape.add_const(tape.row_sum(tape.square(diff)), kRadiusEpsilon));
      const int alpha = tape.softplus(alpha_raw);
      const int beta = tape.sub(tape.softplus(beta_raw), alpha);
      const int h = tape.div(ones, tape.sadd(radius, alpha));
      const int bh = tape.smul(h, beta);
      const int factor = tape.add_const(bh, 1.0);
      z = tape.add(z, tape.colmul(bh, diff));
      const int inner = tape.sub(factor, tape.smul(tape.mul(radius, tape.square(h)), beta));
      const int contribution = tape.add(
          tape.scale(tape.log(factor), double(flow.dim) - 1.0), tape.log(inner));
      log_det = log_det < 0 ? contribution : tape.add(log_det, contribution);
    }
  }
  const int base = tape.add_const(tape.scale(tape.row_sum(tape.square(z)), -0.5),
                                  -0.5 * double(flow.dim) * kLog2Pi);
  nodes.log_prob_rows = log_det < 0 ? base : tape.add(base, log_det);
  nodes.loss = tape.scale(tape.mean(nodes.log_prob_rows), -1.0);
  return nodes;
}

FittedFlow fit_flow(const Matrix& features, const FlowFitConfig& config, Rng rng) {
  if (features.rows == 0 || features.cols == 0) {
    fail(Status::data_error, "fit_flow: empty feature set");
  }
  if (config.batch_size <= 0) fail(Status::config_error, "fit_flow: batch size must be positive");
  if (config.epochs < 0) fail(Status::config_error, "fit_flow: negative epoch count");
  Rng init_rng = rng.derive("init");
  FittedFlow fitted;
  fitted.model = make_flow(features.cols, config.coupling_layers,
                           config.conditioner_hidden, config.radial_layers, init_rng);
  std::vector<Matrix*> params = flow_params(fitted.model);
  if (params.empty() || config.epochs == 0) return fitted;  // nothing to train

  AdamState adam = adam_init(params, config.lr);
  Rng shuffle_rng = rng.derive("shuffle");
  const size_t n = features.rows;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t batch = std::min<size_t>(size_t(config.batch_size), n);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < n; start += batch) {
      const size_t stop = std::min(start + batch, n);
      Matrix zb(stop - start, features.cols);
      for (size_t i = start; i < stop; ++i)
        for (size_t j = 0; j < features.cols; ++j)
          zb.at(i - start, j) = features.at(order[i], j);
      Tape tape;
      const FlowTapeNodes nodes = flow_loss_tape(tape, fitted.model, zb);
      const double loss = tape.value(nodes.loss).data[0];
      if (!std::isfinite(loss)) {
        fail(Status::numeric_error,
             "flow training diverged (non-finite loss) at epoch " +
                 std::to_string(epoch) + ", batch " + std::to_string(start / batch));
      }
      tape.backward(nodes.loss);
      std::vector<const Matrix*> grads;
      grads.reserve(nodes.param_ids.size());
      for (int id : nodes.param_ids) grads.push_back(&tape.grad(id));
      adam_step(adam, params, grads);
      loss_sum += loss * double(stop - start);
      seen += stop - start;
    }
    fitted.trace.push_back(loss_sum / double(seen));
  }
  return fitted;
}

}  // namespace densreg
