#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace semlab {

struct RunReport {
    nlohmann::json resolved_config;
    nlohmann::json metrics;    // kind-specific payload; byte-stable across re-runs
    nlohmann::json artifacts;  // relative output path -> content hash
    double duration_seconds = 0.0;  // kept out of `metrics` on purpose
    std::string tool_version;
};

// Executes one experiment described by `config`. Relative paths in the config
// resolve against `config_dir`. Writes the kind's artifacts plus
// <name>_metrics.json and <name>_report.json into the output directory and
// prints a one-line summary per scalar metric.
RunReport run(const nlohmann::json& config, const std::string& config_dir,
              bool quiet = false);

// Loads a config file and runs it; --seed/--out overrides slot in before
// validation.
RunReport run_config_file(const std::string& path,
                          std::optional<std::uint64_t> seed_override,
                          std::optional<std::string> out_override,
                          bool quiet = false);

const std::vector<std::string>& experiment_kinds();

const std::vector<std::string>& preset_names();

// Writes the preset's step configs plus pipeline.json into out_dir; returns
// the step config paths in run order. Unknown names raise LookupError listing
// the available presets.
std::vector<std::string> write_preset(const std::string& name,
                                      const std::string& out_dir);

}  // namespace semlab
