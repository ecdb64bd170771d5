#pragma once
// Unified interface over the two exact feature-density estimators: a
// normalizing flow (trained by maximum likelihood) and an exponential-kernel
// KDE (fit in closed form). Both return exact log-densities in feature space.

#include <cstddef>
#include <string>

#include "flow.hpp"
#include "kde.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace densreg {

enum class DensityKind { flow, kde };

DensityKind density_kind_from_string(const std::string& name);
std::string density_kind_to_string(DensityKind kind);

struct DensityFitConfig {
  DensityKind kind = DensityKind::flow;
  FlowFitConfig flow;          // flow architecture and optimizer settings
  double kde_bandwidth = 0.0;  // ≤ 0 selects the median-pairwise-L1 heuristic
};

struct DensityModel {
  DensityKind kind = DensityKind::flow;
  FlowModel flow;
  KdeModel kde;
  std::vector<double> trace;  // per-epoch training loss (flow only)
};

// Fits the configured estimator on rows of `features` (one feature vector per
// row). `rng` drives flow initialization and minibatch shuffling; the KDE
// path ignores it.
DensityModel fit_density(const Matrix& features, const DensityFitConfig& config,
                         Rng rng);

double density_log_prob(const DensityModel& model, const double* z, size_t dim);
Matrix density_log_prob_batch(const DensityModel& model, const Matrix& z);

size_t density_param_count(const DensityModel& model);

}  // namespace densreg
