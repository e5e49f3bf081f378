#pragma once

#include "rwl1df/harness.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace rwl1df {

/// Applies one `section.key=value` setting, e.g. `rwl1df.tau=1.0`.
/// Throws InvalidConfig for unknown keys or malformed values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Reads key=value lines; `#` starts a comment, blank lines are ignored.
void load_config(std::istream& in, ExperimentConfig& cfg);
void load_config_file(const std::string& path, ExperimentConfig& cfg);

}  // namespace rwl1df
