#pragma once

// JSON episode configuration. Every object is closed: unknown keys raise
// ConfigError naming the offending path. Missing keys keep the defaults of
// the base configuration (a preset when "preset" is given, else EpisodeConfig{}).

#include <filesystem>
#include <string>
#include <string_view>

#include "rsadp/sim.hpp"

namespace rsadp {

EpisodeConfig parse_config(std::string_view json_text);
EpisodeConfig load_config(const std::filesystem::path& path);

/// Full configuration as JSON text; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const EpisodeConfig& cfg);

/// Region for offline buffer builds: {"lower": [...], "upper": [...]}.
GridSpec parse_region(std::string_view json_text);

}  // namespace rsadp
