#pragma once

#include <map>
#include <string>

#include "polyreach/validate.hpp"

namespace polyreach {

/// Parses the flat TOML study-file dialect documented in the README:
/// `key = value` lines with strings, numbers, booleans and one-line arrays;
/// `#` comments. Unknown keys are rejected.
StudyConfig parse_study_file(const std::string& path);

/// Applies `key=value` overrides (same keys as the study file) on top of a
/// parsed config; CLI flags funnel through here so they win over file values.
void apply_study_overrides(StudyConfig& config, const std::map<std::string, std::string>& kv);

/// The config echoed back in study-file syntax (used in manifests).
std::string study_config_to_string(const StudyConfig& config);

}  // namespace polyreach
