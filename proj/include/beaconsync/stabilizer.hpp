#pragma once

#include <deque>
#include <optional>

#include "beaconsync/pose.hpp"

namespace beaconsync {

/// One UWB-derived beacon position in a session frame.
struct RangingSample {
  Vec3 position = Vec3::Zero();
  double timestamp = 0.0;
};

struct StabilizerConfig {
  double disparity_threshold = 0.05;  ///< metres between successive samples
  double stable_duration = 2.0;       ///< seconds the run must span
  double timeout = 60.0;              ///< seconds since the first sample

  /// Throws ConfigInvalid unless threshold > 0, duration > 0, timeout > duration.
  void validate() const;
};

enum class StabilizerPhase { Collecting, Stable, TimedOut };

struct StabilizerState {
  StabilizerPhase phase = StabilizerPhase::Collecting;
  Vec3 position = Vec3::Zero();  ///< valid when Stable
  double stabilized_at = 0.0;    ///< valid when Stable

  bool terminal() const { return phase != StabilizerPhase::Collecting; }
};

/// Declares a UWB position stream stable once successive observations have
/// stayed within the disparity threshold for `stable_duration` seconds.
///
/// The emitted position is the centroid of the samples inside the trailing
/// window [t - T, t] at the stabilizing sample. A run needs at least two
/// samples, and any out-of-threshold step restarts it.
class UwbStabilizer {
 public:
  explicit UwbStabilizer(StabilizerConfig config = {});

  /// Throws OutOfOrderSample on a decreasing timestamp and PushAfterTerminal
  /// once Stable or TimedOut has been reached.
  const StabilizerState& push(const RangingSample& sample);
  void reset();

  const StabilizerState& state() const { return state_; }
  const StabilizerConfig& config() const { return config_; }

 private:
  StabilizerConfig config_;
  StabilizerState state_;
  std::optional<double> first_timestamp_;
  std::optional<double> run_start_;
  std::deque<RangingSample> run_;  // trailing samples of the current run
};

}  // namespace beaconsync
