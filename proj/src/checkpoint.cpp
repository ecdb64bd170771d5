#include "checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "util.hpp"
#include "version.hpp"

namespace densreg {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormatTag = "densreg-checkpoint";
constexpr int kFormatVersion = 1;

Json matrix_to_json(const Matrix& m) {
  return Json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const Json& j) {
  Matrix m(j.at("rows").get<size_t>(), j.at("cols").get<size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows * m.cols) {
    fail(Status::data_error, "checkpoint: matrix data length does not match shape");
  }
  m.data = data;
  return m;
}

Json mlp_to_json(const Mlp& net) {
  Json layers = Json::array();
  for (size_t l = 0; l < net.layer_count(); ++l) {
    layers.push_back(Json{{"weight", matrix_to_json(net.weights[l])},
                          {"bias", matrix_to_json(net.biases[l])}});
  }
  return Json{
      {"activation", net.activation == Mlp::Activation::relu ? "relu" : "tanh"},
      {"activate_last", net.activate_last},
      {"layers", layers}};
}

Mlp mlp_from_json(const Json& j) {
  Mlp net;
  const std::string act = j.at("activation").get<std::string>();
  if (act == "relu") {
    net.activation = Mlp::Activation::relu;
  } else if (act == "tanh") {
    net.activation = Mlp::Activation::tanh;
  } else {
    fail(Status::data_error, "checkpoint: unknown activation '" + act + "'");
  }
  net.activate_last = j.at("activate_last").get<bool>();
  for (const Json& layer : j.at("layers")) {
    net.weights.push_back(matrix_from_json(layer.at("weight")));
    net.biases.push_back(matrix_from_json(layer.at("bias")));
  }
  return net;
}

Json head_to_json(const GaussianHead& head) {
  return Json{{"weight", matrix_to_json(head.weight)},
              {"bias", matrix_to_json(head.bias)}};
}

GaussianHead head_from_json(const Json& j) {
  GaussianHead head;
  head.weight = matrix_from_json(j.at("weight"));
  head.bias = matrix_from_json(j.at("bias"));
  return head;
}

Json flow_to_json(const FlowModel& flow) {
  Json couplings = Json::array();
  for (const CouplingLayer& layer : flow.couplings) {
    couplings.push_back(Json{{"split", layer.split},
                             {"transform_first", layer.transform_first},
                             {"conditioner", mlp_to_json(layer.conditioner)}});
  }
  Json radials = Json::array();
  for (const RadialLayer& layer : flow.radials) {
    radials.push_back(Json{{"center", matrix_to_json(layer.center)},
                           {"alpha_raw", layer.alpha_raw.data[0]},
                           {"beta_raw", layer.beta_raw.data[0]}});
  }
  return Json{{"dim", flow.dim}, {"couplings", couplings}, {"radials", radials}};
}

FlowModel flow_from_json(const Json& j) {
  FlowModel flow;
  flow.dim = j.at("dim").get<size_t>();
  for (const Json& layer : j.at("couplings")) {
    CouplingLayer coupling;
    coupling.dim = flow.dim;
    coupling.split = layer.at("split").get<size_t>();
    coupling.transform_first = layer.at("transform_first").get<bool>();
    coupling.conditioner = mlp_from_json(layer.at("conditioner"));
    flow.couplings.push_back(std::move(coupling));
  }
  for (const Json& layer : j.at("radials")) {
    RadialLayer radial;
    radial.center = matrix_from_json(layer.at("center"));
    radial.alpha_raw = Matrix(1, 1, layer.at("alpha_raw").get<double>());
    radial.beta_raw = Matrix(1, 1, layer.at("beta_raw").get<double>());
    flow.radials.push_back(std::move(radial));
  }
  return flow;
}

Json density_to_json(const DensityModel& density) {
  Json j{{"kind", density_kind_to_string(density.kind)},
         {"trace", density.trace}};
  if (density.kind == DensityKind::flow) {
    j["flow"] = flow_to_json(density.flow);
  } else {
    j["kde"] = Json{{"bandwidth", density.kde.bandwidth},
                    {"support", matrix_to_json(density.kde.support)}};
  }
  return j;
}

DensityModel density_from_json(const Json& j) {
  DensityModel density;
  density.kind = density_kind_from_string(j.at("kind").get<std::string>());
  density.trace = j.at("trace").get<std::vector<double>>();
  if (density.kind == DensityKind::flow) {
    density.flow = flow_from_json(j.at("flow"));
  } else {
    density.kde.bandwidth = j.at("kde").at("bandwidth").get<double>();
    density.kde.support = matrix_from_json(j.at("kde").at("support"));
  }
  return density;
}

Json stats_to_json(const StandardizationStats& stats) {
  return Json{{"x_mean", stats.x_mean},
              {"x_std", stats.x_std},
              {"y_mean", stats.y_mean},
              {"y_std", stats.y_std},
              {"constant_column", stats.constant_column}};
}

StandardizationStats stats_from_json(const Json& j) {
  StandardizationStats stats;
  stats.x_mean = j.at("x_mean").get<std::vector<double>>();
  stats.x_std = j.at("x_std").get<std::vector<double>>();
  stats.y_mean = j.at("y_mean").get<double>();
  stats.y_std = j.at("y_std").get<double>();
  stats.constant_column = j.at("constant_column").get<bool>();
  return stats;
}

Json model_to_json(const TrainedModel& model) {
  Json j{{"stage", model.stage},
         {"standardization", stats_to_json(model.stats)},
         {"extractor", mlp_to_json(model.extractor)},
         {"head", head_to_json(model.head)},
         {"head_stage1", head_to_json(model.head_stage1)},
         {"trace_stage1", model.trace_stage1},
         {"trace_stage3", model.trace_stage3}};
  if (model.stage >= 2) {
    j["density"] = density_to_json(model.density);
    j["log_p_offset"] = model.log_p_offset;
  }
  return j;
}

TrainedModel model_from_json(const Json& j) {
  TrainedModel model;
  model.stage = j.at("stage").get<int>();
  model.stats = stats_from_json(j.at("standardization"));
  model.extractor = mlp_from_json(j.at("extractor"));
  model.head = head_from_json(j.at("head"));
  model.head_stage1 = head_from_json(j.at("head_stage1"));
  model.trace_stage1 = j.at("trace_stage1").get<std::vector<double>>();
  model.trace_stage3 = j.at("trace_stage3").get<std::vector<double>>();
  if (model.stage >= 2) {
    model.density = density_from_json(j.at("density"));
    model.log_p_offset = j.at("log_p_offset").get<double>();
  }
  return model;
}

Json document_header(const std::string& method, const std::string& config_echo) {
  return Json{{"format", kFormatTag},
              {"format_version", kFormatVersion},
              {"version", DENSREG_VERSION_STRING},
              {"config", config_echo},
              {"method", method}};
}

std::string dump_document(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Status::io_error, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(Status::io_error, "failed writing '" + path + "'");
}

}  // namespace

std::string checkpoint_to_string(const TrainedModel& model, const std::string& method,
                                 const std::string& config_echo) {
  if (method == "ensemble") {
    fail(Status::invalid_argument,
         "checkpoint: single model cannot be saved as method 'ensemble'");
  }
  Json j = document_header(method, config_echo);
  j["model"] = model_to_json(model);
  return dump_document(j);
}

std::string checkpoint_to_string(const EnsembleModel& ensemble,
                                 const std::string& config_echo) {
  Json j = document_header("ensemble", config_echo);
  Json members = Json::array();
  for (const TrainedModel& member : ensemble.members) {
    members.push_back(model_to_json(member));
  }
  j["members"] = members;
  return dump_document(j);
}

LoadedCheckpoint checkpoint_from_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Status::data_error, std::string("checkpoint parse error: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kFormatTag) {
      fail(Status::config_error, "not a model checkpoint (missing format tag)");
    }
    if (j.at("format_version").get<int>() != kFormatVersion) {
      fail(Status::config_error, "unsupported checkpoint format version");
    }
    LoadedCheckpoint loaded;
    loaded.method = j.at("method").get<std::string>();
    loaded.config_echo = j.at("config").get<std::string>();
    loaded.version = j.at("version").get<std::string>();
    if (loaded.method == "ensemble") {
      for (const Json& member : j.at("members")) {
        loaded.ensemble.members.push_back(model_from_json(member));
      }
    } else {
      method_from_string(loaded.method);  // validates the name
      loaded.model = model_from_json(j.at("model"));
    }
    return loaded;
  } catch (const nlohmann::json::exception& e) {
    fail(Status::data_error, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::string& method,
                     const std::string& config_echo, const std::string& path) {
  write_file(path, checkpoint_to_string(model, method, config_echo));
}

void save_checkpoint(const EnsembleModel& ensemble, const std::string& config_echo,
                     const std::string& path) {
  write_file(path, checkpoint_to_string(ensemble, config_echo));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io_error, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str());
}

}  // namespace densreg
