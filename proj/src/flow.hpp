#pragma once
// Normalizing flow over feature space: affine coupling layers with
// alternating contiguous half-masks, optional radial layers, and a standard
// normal base. The forward direction maps features to the base space and
// accumulates the analytic log|det| of the Jacobian, so
//   log p(z) = log N(t; 0, I) + Σ log|det ∂t/∂z|
// is exact. Coupling log-scales pass through 3·tanh(·), bounding each layer's
// per-dimension stretch to |log-scale| ≤ 3. Radial layers keep the
// invertibility constraint β ≥ −α by construction:
//   α = softplus(α_raw), β = −α + softplus(β_raw).
// All-zero parameters make every layer the identity map.

#include <cstddef>
#include <vector>

#include "mlp.hpp"
#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace densreg {

struct CouplingLayer {
  size_t dim = 0;
  size_t split = 0;            // first half = [0, split), second = [split, dim)
  bool transform_first = false;  // which half is rewritten (the other conditions)
  Mlp conditioner;             // kept half → [log-scale | shift], tanh hidden, zero-init output
};

struct RadialLayer {
  Matrix center;     // 1×d
  Matrix alpha_raw;  // 1×1
  Matrix beta_raw;   // 1×1
};

struct FlowModel {
  size_t dim = 0;
  std::vector<CouplingLayer> couplings;  // applied first, in order
  std::vector<RadialLayer> radials;      // applied after the couplings
};

// Couplings transform the second half on even layer indices and the first
// half on odd ones. Conditioner output layers start at zero, radial
// parameters at zero: the freshly made flow is the identity.
FlowModel make_flow(size_t dim, size_t coupling_layers, size_t conditioner_hidden,
                    size_t radial_layers, Rng& rng);

struct FlowForward {
  Matrix t;        // n×d latent
  Matrix log_det;  // n×1 accumulated log|det|
};

FlowForward flow_forward(const FlowModel& flow, const Matrix& z);
Matrix flow_log_prob(const FlowModel& flow, const Matrix& z);  // n×1
Matrix flow_inverse(const FlowModel& flow, const Matrix& t);

std::vector<Matrix*> flow_params(FlowModel& flow);
size_t flow_param_count(const FlowModel& flow);

struct FlowTapeNodes {
  std::vector<int> param_ids;  // aligned with flow_params() order
  int log_prob_rows = -1;      // n×1
  int loss = -1;               // 1×1 mean negative log-likelihood
};

// Records −mean(log p) for one batch on the tape.
FlowTapeNodes flow_loss_tape(Tape& tape, const FlowModel& flow, const Matrix& z_batch);

struct FlowFitConfig {
  size_t coupling_layers = 2;
  size_t conditioner_hidden = 8;
  size_t radial_layers = 0;
  int epochs = 200;
  int batch_size = 128;
  double lr = 1e-3;
};

struct FittedFlow {
  FlowModel model;
  std::vector<double> trace;  // per-epoch mean negative log-likelihood
};

// Maximum-likelihood fit by mini-batch Adam on the given features.
FittedFlow fit_flow(const Matrix& features, const FlowFitConfig& config, Rng rng);

}  // namespace densreg
