#pragma once
// Small fully connected networks: the feature extractor and the coupling-layer
// conditioners. Row convention throughout: activations are n×d, weights are
// in×out, a layer computes x·W + b.

#include <vector>

#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace densreg {

struct Mlp {
  enum class Activation { relu, tanh };

  std::vector<Matrix> weights;  // weights[l] has shape dims[l] × dims[l+1]
  std::vector<Matrix> biases;   // biases[l] has shape 1 × dims[l+1]
  Activation activation = Activation::relu;
  bool activate_last = true;    // extractor features are post-activation

  size_t layer_count() const { return weights.size(); }
  size_t input_dim() const { return weights.empty() ? 0 : weights.front().rows; }
  size_t output_dim() const { return weights.empty() ? 0 : weights.back().cols; }
  size_t param_count() const;
  std::vector<Matrix*> params();
  std::vector<const Matrix*> params() const;
};

// He-normal initialization for ReLU nets, Glorot-uniform for tanh nets; biases
// start at zero. zero_output zeroes the final layer (identity-at-init
// conditioners for flows).
Mlp make_mlp(const std::vector<size_t>& dims, Mlp::Activation act,
             bool activate_last, Rng& rng, bool zero_output = false);

struct MlpTapeNodes {
  std::vector<int> param_ids;  // aligned with Mlp::params() order
  int output = -1;
};

// Records the forward pass on the tape; weights/biases become leaves whose
// ids are returned alongside, aligned with Mlp::params() order.
MlpTapeNodes mlp_forward_tape(Tape& tape, int input, const Mlp& net);

// Plain forward pass for inference (no tape).
Matrix mlp_forward(const Mlp& net, const Matrix& input);

}  // namespace densreg
