#pragma once

#include <string>

#include "hspsim/instrument.hpp"

namespace hspsim {

// Config files are JSON with explicit units in the field names
// (delta_t_switch_ns, t_dead_us, ...); everything converts to integer
// picoseconds on load.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config, int indent = 2);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

// Run manifest: the fully resolved config, master seed and trigger count.
// Together with the derivation scheme in rng.hpp this reproduces every draw.
std::string manifest_json_text(const ExperimentConfig& config, std::uint64_t n_triggers);
ExperimentConfig config_from_manifest(const std::string& path, std::uint64_t* n_triggers = nullptr);

} // namespace hspsim
