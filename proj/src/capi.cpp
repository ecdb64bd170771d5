#include "densreg.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "checkpoint.hpp"
#include "driver.hpp"
#include "json.hpp"
#include "train.hpp"
#include "util.hpp"
#include "version.hpp"

using densreg::Error;
using densreg::Status;

struct densreg_config {
  nlohmann::json file = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct densreg_model {
  densreg::LoadedCheckpoint loaded;
};

namespace {

thread_local std::string g_last_error;

densreg_status to_c_status(Status status) {
  switch (status) {
    case Status::ok: return DENSREG_OK;
    case Status::internal: return DENSREG_ERR_INTERNAL;
    case Status::config_error: return DENSREG_ERR_CONFIG;
    case Status::data_error: return DENSREG_ERR_DATA;
    case Status::numeric_error: return DENSREG_ERR_NUMERIC;
    case Status::io_error: return DENSREG_ERR_IO;
    case Status::invalid_argument: return DENSREG_ERR_INVALID;
  }
  return DENSREG_ERR_INTERNAL;
}

// Runs `body`, converting exceptions into status codes + the thread-local
// error message.
template <typename Body>
densreg_status guarded(Body&& body) {
  try {
    body();
    g_last_error.clear();
    return DENSREG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_c_status(e.status());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DENSREG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DENSREG_ERR_INTERNAL;
  }
}

densreg_status invalid(const char* message) {
  g_last_error = message;
  return DENSREG_ERR_INVALID;
}

}  // namespace

extern "C" {

const char* densreg_version(void) { return DENSREG_VERSION_STRING; }

const char* densreg_last_error(void) { return g_last_error.c_str(); }

void densreg_string_free(char* s) { std::free(s); }

densreg_status densreg_config_create(const char* json_text, densreg_config** out) {
  if (out == nullptr) return invalid("out pointer is null");
  *out = nullptr;
  return guarded([&] {
    auto config = std::make_unique<densreg_config>();
    if (json_text != nullptr && json_text[0] != '\0') {
      config->file = nlohmann::json::parse(json_text, nullptr,
                                           /*allow_exceptions=*/false);
      if (config->file.is_discarded()) {
        densreg::fail(Status::config_error, "config is not valid JSON");
      }
      // Validate keys and types against the schema right away.
      nlohmann::json scratch = densreg::default_experiment_config();
      densreg::merge_config(scratch, config->file);
    }
    *out = config.release();
  });
}

densreg_status densreg_config_set(densreg_config* config, const char* dotted_key,
                                  const char* value) {
  if (config == nullptr) return invalid("config handle is null");
  if (dotted_key == nullptr || value == nullptr) {
    return invalid("--set needs a key and a value");
  }
  return guarded([&] {
    // Validate the key and value shape immediately; the command defaults
    // never add keys, so the schema is command-independent.
    nlohmann::json scratch = densreg::default_experiment_config();
    densreg::merge_config(scratch, config->file);
    for (const auto& [k, v] : config->overrides) {
      densreg::apply_set_override(scratch, k, v);
    }
    densreg::apply_set_override(scratch, dotted_key, value);
    config->overrides.emplace_back(dotted_key, value);
  });
}

densreg_status densreg_config_render(const densreg_config* config, char** out_json) {
  if (config == nullptr) return invalid("config handle is null");
  if (out_json == nullptr) return invalid("out pointer is null");
  *out_json = nullptr;
  return guarded([&] {
    nlohmann::json merged = densreg::default_experiment_config();
    densreg::merge_config(merged, config->file);
    for (const auto& [key, value] : config->overrides) {
      densreg::apply_set_override(merged, key, value);
    }
    const std::string text = densreg::canonical_echo(merged);
    char* buffer = static_cast<char*>(std::malloc(text.size() + 1));
    if (buffer == nullptr) throw std::bad_alloc();
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    *out_json = buffer;
  });
}

void densreg_config_destroy(densreg_config* config) { delete config; }

densreg_status densreg_run_command(const char* command, const densreg_config* config) {
  if (command == nullptr) return invalid("command is null");
  if (config == nullptr) return invalid("config handle is null");
  return guarded([&] {
    densreg::run_command(command, config->file, config->overrides);
  });
}

densreg_status densreg_model_load(const char* path, densreg_model** out) {
  if (path == nullptr) return invalid("path is null");
  if (out == nullptr) return invalid("out pointer is null");
  *out = nullptr;
  return guarded([&] {
    auto model = std::make_unique<densreg_model>();
    model->loaded = densreg::load_checkpoint(path);
    *out = model.release();
  });
}

const char* densreg_model_method(const densreg_model* model) {
  return model == nullptr ? "" : model->loaded.method.c_str();
}

size_t densreg_model_param_count(const densreg_model* model) {
  if (model == nullptr) return 0;
  if (model->loaded.method == "ensemble") {
    return densreg::count_parameters(model->loaded.ensemble);
  }
  return densreg::count_parameters(model->loaded.model);
}

densreg_status densreg_model_predict(const densreg_model* model, const double* x,
                                     size_t dim, double* mean, double* variance) {
  if (model == nullptr) return invalid("model handle is null");
  if (x == nullptr || dim == 0) return invalid("input point is empty");
  return guarded([&] {
    const densreg::PredictiveGaussian pred =
        model->loaded.method == "ensemble"
            ? densreg::ensemble_predict(model->loaded.ensemble, x, dim)
            : densreg::predict(model->loaded.model, x, dim);
    if (mean != nullptr) *mean = pred.mean;
    if (variance != nullptr) *variance = pred.variance;
  });
}

void densreg_model_destroy(densreg_model* model) { delete model; }

}  // extern "C"
