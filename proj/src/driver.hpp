#pragma once
// Experiment orchestration behind the CLI: config merging with documented
// precedence, dataset construction, the four commands (toy, train, eval,
// compare), and the on-disk output layout
//   <outdir>/<method>/<seed>/{checkpoint, metrics_iid, metrics_ood,
//                             plotdata_band, plotdata_reliability_iid,
//                             plotdata_reliability_ood}
// plus summary.csv and compare_table.csv at <outdir> for compare runs.
//
// Every output file embeds the canonical config echo and the version string.
// Precedence, lowest to highest: built-in defaults, command defaults (the
// toy command selects the KDE density), the --config file, --set overrides.

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace densreg {

// The full default configuration tree; also the schema every file/override
// key is validated against.
nlohmann::json default_experiment_config();

// Per-command value overrides applied on top of the defaults.
nlohmann::json command_default_overrides(const std::string& command);

// Recursive overlay: objects merge, scalars and arrays replace. Keys absent
// from `base` are rejected as unknown (the defaults define the schema).
void merge_config(nlohmann::json& base, const nlohmann::json& overlay);

// Applies one --set override. The value text is parsed as JSON when
// possible, otherwise taken as a string.
void apply_set_override(nlohmann::json& config, const std::string& dotted_key,
                        const std::string& value);

// Sorted-key single-line JSON echo embedded in every output.
std::string canonical_echo(const nlohmann::json& config);

// Defaults → command defaults → file config → --set overrides.
nlohmann::json effective_config(
    const std::string& command, const nlohmann::json& file_config,
    const std::vector<std::pair<std::string, std::string>>& overrides);

// Runs one command ("toy", "train", "eval", "compare") end to end.
void run_command(const std::string& command, const nlohmann::json& file_config,
                 const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace densreg
