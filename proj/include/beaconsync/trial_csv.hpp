#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "beaconsync/sim_world.hpp"

namespace beaconsync {

/// First line of every trials CSV.
inline constexpr const char* kTrialsSchemaLine = "# schema=beaconsync.trials/1";

/// Column order of the trials CSV. Stable; extend only by bumping the schema.
const std::vector<std::string>& trial_csv_columns();

/// One CSV row. Errors are averaged over the trial's resolved anchors.
struct TrialRow {
  Approach approach = Approach::Uwb;
  double environment_level = 0.0;
  int trial = 0;
  int device = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<double> localization_delay;
  std::optional<double> time_to_stable;
  int anchor_count = 0;
  std::optional<double> position_error;
  std::optional<double> orientation_error;
  std::optional<RigidPose> reference_pose;
  std::vector<RoomSwitchEvent> room_switches;
};

TrialRow to_row(const TrialRecord& record);

void write_trials_csv(std::ostream& out, const std::vector<TrialRow>& rows);
/// Throws IoError.
void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRow>& rows);

/// Throws SchemaMismatch on a missing schema line, a different header, or a
/// malformed cell.
std::vector<TrialRow> read_trials_csv(std::istream& in);
/// Throws IoError or SchemaMismatch.
std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path);

}  // namespace beaconsync
