#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "beaconsync/scenario.hpp"
#include "beaconsync/trial_csv.hpp"

namespace beaconsync {

struct DisparityStats {
  double pos_mean = 0.0;  ///< metres
  double pos_max = 0.0;
  double rot_mean = 0.0;  ///< radians
  double rot_max = 0.0;
  std::size_t pairs = 0;
};

/// Mean and max position and orientation differences over every unordered
/// pair of reference poses. Throws TooFewSessions for fewer than two poses.
DisparityStats pairwise_disparity(std::span<const RigidPose> reference_poses);

struct LevelSuccess {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

struct ApproachMetrics {
  Approach approach = Approach::Uwb;
  std::size_t trials = 0;
  std::size_t successes = 0;
  // Over successful rows only; absent when no row succeeded.
  std::optional<double> position_error_mean;
  std::optional<double> position_error_max;
  std::optional<double> orientation_error_mean;
  std::optional<double> orientation_error_max;
  std::optional<double> latency_mean;
  std::optional<double> latency_stddev;  ///< population standard deviation
  std::map<double, LevelSuccess> success_by_level;
  /// UWB rows carrying a reference pose, when there are at least two.
  std::optional<DisparityStats> reference_disparity;
};

struct MetricsReport {
  std::vector<ApproachMetrics> approaches;  ///< in Approach enum order
  bool empty() const { return approaches.empty(); }
};

MetricsReport compute_report(std::span<const TrialRow> rows);

/// Human-readable table; "no data" for an empty report.
void print_report(std::ostream& out, const MetricsReport& report);

inline constexpr const char* kReportSchemaLine = "# schema=beaconsync.report/1";
/// Long-format CSV: approach,metric,environment_level,value.
void write_report_csv(std::ostream& out, const MetricsReport& report);

/// Runs every (approach, level, trial) of the scenario. Trial i uses seed
/// `scenario.seed + i` at every level. Rows come back in that loop order
/// regardless of how many worker threads run them.
std::vector<TrialRecord> run_batch(const Scenario& scenario);

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfigInvalid = 2, kExitIoError = 3 };

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> jobs;
};

/// `run`: load the config, execute the batch, write the trials CSV.
int cli_run(const std::filesystem::path& config_path, const std::filesystem::path& output_csv,
            const RunOverrides& overrides, std::ostream& log);

/// `report`: aggregate a trials CSV, print the table, optionally write the
/// report CSV. SchemaMismatch exits with kExitConfigInvalid.
int cli_report(const std::filesystem::path& trials_csv, const std::optional<std::filesystem::path>& report_csv,
               std::ostream& out, std::ostream& log);

}  // namespace beaconsync
