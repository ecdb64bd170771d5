#include "density.hpp"

#include "util.hpp"

namespace densreg {

DensityKind density_kind_from_string(const std::string& name) {
  if (name == "flow") return DensityKind::flow;
  if (name == "kde") return DensityKind::kde;
  fail(Status::config_error,
       "unknown density kind '" + name + "' (expected 'flow' or 'kde')");
}

std::string density_kind_to_string(DensityKind kind) {
  return kind == DensityKind::flow ? "flow" : "kde";
}

DensityModel fit_density(const Matrix& features, const DensityFitConfig& config,
                         Rng rng) {
  DensityModel model;
  model.kind = config.kind;
  if (config.kind == DensityKind::flow) {
    FittedFlow fitted = fit_flow(features, config.flow, rng);
    model.flow = std::move(fitted.model);
    model.trace = std::move(fitted.trace);
  } else {
    model.kde = fit_kde(features, config.kde_bandwidth);
  }
  return model;
}

double density_log_prob(const DensityModel& model, const double* z,
                        size_t dim) {
  if (model.kind == DensityKind::kde) return kde_log_prob(model.kde, z, dim);
  if (dim != model.flow.dim) {
    fail(Status::invalid_argument, "flow query dimension mismatch");
  }
  Matrix row(1, dim);
  for (size_t k = 0; k < dim; ++k) row.at(0, k) = z[k];
  return flow_log_prob(model.flow, row).at(0, 0);
}

Matrix density_log_prob_batch(const DensityModel& model, const Matrix& z) {
  if (model.kind == DensityKind::kde) return kde_log_prob_batch(model.kde, z);
  return flow_log_prob(model.flow, z);
}

size_t density_param_count(const DensityModel& model) {
  if (model.kind == DensityKind::kde) return kde_param_count(model.kde);
  return flow_param_count(model.flow);
}

}  // namespace densreg
