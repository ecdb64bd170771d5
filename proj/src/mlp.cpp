#include "mlp.hpp"

#include <cmath>

#include "util.hpp"

namespace densreg {

size_t Mlp::param_count() const {
  size_t count = 0;
  for (const Matrix& w : weights) count += w.size();
  for (const Matrix& b : biases) count += b.size();
  return count;
}

std::vector<Matrix*> Mlp::params() {
  std::vector<Matrix*> out;
  for (size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Matrix*> Mlp::params() const {
  std::vector<const Matrix*> out;
  for (size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

Mlp make_mlp(const std::vector<size_t>& dims, Mlp::Activation act,
             bool activate_last, Rng& rng, bool zero_output) {
  if (dims.size() < 2) fail(Status::config_error, "make_mlp: need at least one layer");
  for (size_t d : dims)
    if (d == 0) fail(Status::config_error, "make_mlp: zero-width layer");
  Mlp net;
  net.activation = act;
  net.activate_last = activate_last;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const size_t fan_in = dims[l], fan_out = dims[l + 1];
    Matrix w(fan_in, fan_out);
    const bool last = (l + 2 == dims.size());
    if (!(zero_output && last)) {
      if (act == Mlp::Activation::relu) {
        const double std_dev = std::sqrt(2.0 / double(fan_in));
        for (double& x : w.data) x = rng.normal() * std_dev;
      } else {
        const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
        for (double& x : w.data) x = rng.uniform(-limit, limit);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(1, fan_out);
  }
  return net;
}

MlpTapeNodes mlp_forward_tape(Tape& tape, int input, const Mlp& net) {
  MlpTapeNodes nodes;
  int h = input;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    const int w = tape.leaf(net.weights[l]);
    const int b = tape.leaf(net.biases[l]);
    nodes.param_ids.push_back(w);
    nodes.param_ids.push_back(b);
    h = tape.bias_add(tape.matmul(h, w), b);
    const bool last = (l + 1 == net.weights.size());
    if (!last || net.activate_last) {
      h = (net.activation == Mlp::Activation::relu) ? tape.relu(h) : tape.tanh(h);
    }
  }
  nodes.output = h;
  return nodes;
}

Matrix mlp_forward(const Mlp& net, const Matrix& input) {
  Matrix h = input;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    Matrix pre = matmul(h, net.weights[l]);
    const Matrix& b = net.biases[l];
    for (size_t i = 0; i < pre.rows; ++i)
      for (size_t j = 0; j < pre.cols; ++j) pre.at(i, j) += b.at(0, j);
    const bool last = (l + 1 == net.weights.size());
    if (!last || net.activate_last) {
      if (net.activation == Mlp::Activation::relu) {
        for (double& x : pre.data) x = x > 0.0 ? x : 0.0;
      } else {
        for (double& x : pre.data) x = std::tanh(x);
      }
    }
    h = std::move(pre);
  }
  return h;
}

}  // namespace densreg
