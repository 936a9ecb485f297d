#pragma once

#include <filesystem>

#include "llrl/harness.hpp"

namespace llrl {

// Flat key = value text, '#' starts a comment, unknown keys are rejected.
ExperimentConfig parse_config_file(const std::filesystem::path& path);

}  // namespace llrl
