#pragma once
// Adam with bias correction over a fixed list of parameter matrices.

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace densreg {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t step = 0;
  std::vector<Matrix> m, v;  // first/second moments, shaped like the parameters
};

AdamState adam_init(const std::vector<Matrix*>& params, double lr);

// In-place update; `grads` must align with `params` element by element.
void adam_step(AdamState& state, const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads);

}  // namespace densreg
