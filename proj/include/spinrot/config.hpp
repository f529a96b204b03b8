#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spinrot/experiment.hpp"

namespace spinrot {

/// Everything a run needs, normalized to SI.
struct RunConfig {
    InterferometerSetup setup;
    CalibrationPlan plan;
    Acquisition acquisition;  // seed is supplied on the command line
};

/// Parses a YAML document. Every physical quantity must carry a unit
/// ("9 G", "2 cm", "20 kHz"); dimensionless values (contrast, transmissions,
/// imbalance, point counts) are plain numbers. Unknown keys are rejected.
/// Throws ConfigError whose message starts with the offending field path.
RunConfig parse_config(std::string_view yaml_text);

/// Throws IoError if unreadable, ConfigError if invalid.
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved snapshot, SI units, stable key order.
nlohmann::json to_json(const RunConfig& config);

/// FNV-1a 64 of the compact snapshot.
std::uint64_t config_hash(const RunConfig& config);

/// The configuration used when no file is given, as YAML text.
std::string default_config_yaml();

}  // namespace spinrot
