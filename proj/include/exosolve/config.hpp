#pragma once

#include <filesystem>
#include <string>

#include "exosolve/perception.hpp"
#include "exosolve/pipeline.hpp"

namespace exosolve {

/// Values read from a YAML file with optional `estimators:` and `ssl:` sections.
/// Missing keys keep their defaults; angles in the file are degrees.
struct RunConfig {
  EstimatorParams estimators;
  SSLConfig ssl;
};

/// Throws ConfigError for unreadable files, unknown keys or invalid values.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& yaml_text);

}  // namespace exosolve
