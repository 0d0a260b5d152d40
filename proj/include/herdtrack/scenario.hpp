#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "herdtrack/simulator.hpp"

namespace herdtrack::sim {

/// Parses a scenario document (JSON object, nested by module). Keys absent
/// from the document keep their defaults; unknown keys, wrong types, and
/// out-of-range values raise ConfigError naming the dotted key path.
ScenarioConfig parse_scenario(std::string_view text);

/// Reads and parses a scenario file. A missing or unreadable file raises
/// ConfigError carrying the path.
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace herdtrack::sim
