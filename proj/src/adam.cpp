#include "adam.hpp"

#include <cmath>

#include "util.hpp"

namespace densreg {

AdamState adam_init(const std::vector<Matrix*>& params, double lr) {
  AdamState state;
  state.lr = lr;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Matrix* p : params) {
    state.m.emplace_back(p->rows, p->cols);
    state.v.emplace_back(p->rows, p->cols);
  }
  return state;
}

void adam_step(AdamState& state, const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    fail(Status::invalid_argument, "adam_step: parameter/gradient/state counts disagree");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    if (!p.same_shape(g) || !p.same_shape(m)) {
      fail(Status::invalid_argument, "adam_step: shape mismatch at parameter " +
                                         std::to_string(k));
    }
    for (size_t i = 0; i < p.size(); ++i) {
      const double gi = g.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace densreg
