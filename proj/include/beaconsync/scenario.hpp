#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beaconsync/sim_world.hpp"

namespace beaconsync {

/// A batch of trials as described by a scenario config file.
///
/// The file is line-oriented `key = value` text; `#` starts a comment.
/// docs/scenario_config.md lists every key.
struct Scenario {
  WorldModel world = WorldModel::desk_scale();
  SimParams params;
  std::vector<Approach> approaches = {Approach::Uwb};
  int trials = 1;
  std::uint64_t seed = 1;
  int devices = 1;
  std::vector<double> environment_levels = {0.0};
  /// Worker threads for the batch; output order does not depend on it.
  int jobs = 1;
};

/// Throws ConfigInvalid naming the offending key (and line) on any error.
Scenario parse_scenario(const std::string& text);
/// Throws IoError when the file cannot be read, ConfigInvalid otherwise.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace beaconsync
