#pragma once
// Model serialization: a single self-describing JSON document holding every
// weight with explicit shapes, the standardization stats, the stage marker,
// and the training traces, plus a config echo and version string. Doubles are
// written in shortest round-trip form, so save → load → save is
// byte-identical and a reloaded model predicts bit-exactly.

#include <string>

#include "train.hpp"

namespace densreg {

struct LoadedCheckpoint {
  std::string method;       // "density-regression", "deterministic", "ensemble"
  std::string config_echo;  // canonical config line as saved (may be empty)
  std::string version;      // version string of the writer
  TrainedModel model;       // populated unless method == "ensemble"
  EnsembleModel ensemble;   // populated when method == "ensemble"
};

std::string checkpoint_to_string(const TrainedModel& model, const std::string& method,
                                 const std::string& config_echo);
std::string checkpoint_to_string(const EnsembleModel& ensemble,
                                 const std::string& config_echo);
LoadedCheckpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const TrainedModel& model, const std::string& method,
                     const std::string& config_echo, const std::string& path);
void save_checkpoint(const EnsembleModel& ensemble, const std::string& config_echo,
                     const std::string& path);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace densreg
