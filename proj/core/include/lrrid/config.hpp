#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lrrid/experiment.hpp"

namespace lrrid {

/// Parses a JSON experiment config. The protocol block selects a preset
/// (see preset()); every other field overrides it. Throws
/// std::invalid_argument on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(std::string_view json_text);

/// Reads and parses a config file. Throws IoError if it cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// JSON text that parse_config maps back to an equal configuration.
std::string dump_config(const ExperimentConfig& config);

}  // namespace lrrid
