#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beaconsync/anchor_store.hpp"
#include "beaconsync/pose.hpp"
#include "beaconsync/ranging_scheduler.hpp"
#include "beaconsync/rng.hpp"
#include "beaconsync/room_resolver.hpp"
#include "beaconsync/stabilizer.hpp"

namespace beaconsync {

// World frame: +x magnetic north, +y up, +z east. A north-aligned reference
// orientation expressed in world coordinates is therefore the identity.

struct Room {
  std::string id;
  double x_min = 0.0;
  double z_min = 0.0;
  double x_max = 0.0;
  double z_max = 0.0;

  bool contains(const Vec3& p) const { return p.x() >= x_min && p.x() <= x_max && p.z() >= z_min && p.z() <= z_max; }
  Vec3 center(double height) const { return {(x_min + x_max) / 2.0, height, (z_min + z_max) / 2.0}; }
};

enum class BeaconKind { Ble, Uwb };

struct Beacon {
  std::string id;
  BeaconKind kind = BeaconKind::Ble;
  RigidPose true_pose;
  std::string room_id;
};

struct AnchorTruth {
  std::string id;
  std::string room_id;
  RigidPose true_pose;
};

struct WorldModel {
  std::vector<Room> rooms;
  std::vector<Beacon> beacons;
  std::vector<AnchorTruth> anchors;
  double environment_change_level = 0.0;

  /// Throws ConfigInvalid when a beacon or anchor names an unknown room, an id
  /// repeats, or the change level is outside [0, 1].
  void validate() const;

  const Room* find_room(const std::string& id) const;
  const Beacon* find_beacon(const std::string& id) const;
  /// First UWB beacon registered to `room_id`.
  const Beacon* uwb_beacon_in(const std::string& room_id) const;
  BeaconRegistry ble_registry() const;

  /// Two adjoining 6 m x 5 m rooms, two BLE beacons and one UWB beacon each,
  /// and one hosted anchor per room.
  static WorldModel desk_scale();
};

/// Fixed reference pose of a UWB beacon in world coordinates: the beacon's
/// position with a north-aligned, gravity-aligned orientation.
RigidPose true_reference_pose(const Beacon& beacon);

struct NoiseConfig {
  /// Per-axis sigma of the session-to-session UWB position offset once the
  /// transient has passed (drawn once per ranging stream).
  double uwb_post_transient_sigma = 0.02;
  /// Per-axis sigma of sample-to-sample UWB jitter after the transient.
  double uwb_jitter_sigma = 0.004;
  double uwb_transient_sigma = 0.5;
  double uwb_transient_mean_duration = 23.0;
  double uwb_transient_jitter_sigma = 2.0;
  double heading_sigma = 0.084;
  double heading_site_bias_sigma = 0.05;
  double ble_rssi_sigma = 2.0;
  /// Per-axis optical position sigma; 0.02 m mean error magnitude.
  double optical_pos_sigma = 0.012533;
  /// Sigma of the optical rotation magnitude; 0.03 rad mean error.
  double optical_rot_sigma = 0.037599;
  double optical_fail_level = 0.6;
  double optical_delay_mean = 4.0;
  double optical_delay_sigma = 1.0;
  double map_transfer_delay = 1.5;

  void validate() const;
  /// Every sigma and transient zeroed; delays kept.
  static NoiseConfig noiseless();
};

struct Waypoint {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
};

/// One AR session on one device.
struct DeviceSession {
  std::string device_id;
  /// World-to-session transform; its rotation is about world +y only.
  RigidPose session_frame;
  /// Camera orientation in world coordinates; forward is the camera's -z axis.
  Mat3 camera_orientation = Mat3::Identity();
  /// Timed positions in world coordinates; a single waypoint means stationary.
  std::vector<Waypoint> trajectory;

  Vec3 position_at(double t) const;
  RigidPose camera_world(double t) const { return {camera_orientation, position_at(t)}; }
  RigidPose camera_in_session(double t) const { return compose(session_frame, camera_world(t)); }
  /// Clockwise-from-north azimuth of the ground-projected camera forward.
  double true_azimuth() const;
};

/// Camera orientation whose forward (-z) points at `azimuth` clockwise from
/// north, tilted by `pitch` (positive up) and rolled by `roll` about forward.
Mat3 camera_orientation(double azimuth, double pitch, double roll);

/// Gravity-aligned session frame: yaw about +y, then translation.
RigidPose make_session_frame(double yaw, const Vec3& translation);

/// One advertisement per BLE beacon within `range` metres, RSSI from the
/// resolver's path-loss model plus Gaussian noise, clamped to [-120, 0].
std::vector<BeaconAdvertisement> sample_ble_scan(const DeviceSession& device, double t, const WorldModel& world,
                                                 const NoiseConfig& noise, const ProximityCalibration& cal,
                                                 Rng& rng, double range = 30.0);

/// UWB ranging between one device and one beacon. The transient duration and
/// the post-transient offset are drawn once when the stream is opened.
class UwbRangingStream {
 public:
  UwbRangingStream(const DeviceSession& device, const Beacon& beacon, const NoiseConfig& noise, Rng rng);

  /// Throws NoRangingSlot unless `scheduler` has granted this device a slot.
  RangingSample sample(const RangingScheduler& scheduler, double elapsed_since_ranging_start, double now);

  double transient_duration() const { return transient_duration_; }
  const Vec3& post_transient_offset() const { return offset_; }
  /// True beacon position in the device's session frame.
  const Vec3& true_position() const { return true_position_; }

 private:
  std::string device_id_;
  std::string beacon_id_;
  Vec3 true_position_;
  NoiseConfig noise_;
  Rng rng_;
  double transient_duration_ = 0.0;
  Vec3 offset_ = Vec3::Zero();
};

/// Heading = true azimuth + site bias + Gaussian(0, heading_sigma), wrapped.
HeadingReading sample_heading(const DeviceSession& device, double site_bias, double t, const NoiseConfig& noise,
                              Rng& rng);

struct OpticalError {
  Vec3 position_offset = Vec3::Zero();
  Mat3 rotation_offset = Mat3::Identity();

  RigidPose apply(const RigidPose& truth) const {
    return {rotation_offset * truth.rotation(), truth.translation() + position_offset};
  }
};

/// clamp(1 - c / c_fail, 0, 1).
double optical_success_probability(double change_level, const NoiseConfig& noise);

/// One relocalization attempt. Always consumes the success draw first, so a
/// given stream succeeds at level c2 only if it also succeeds at any c1 < c2.
std::optional<OpticalError> attempt_optical_localization(double change_level, const NoiseConfig& noise, Rng& rng);
/// Error draw for one more anchor resolved in an already relocalized session.
OpticalError draw_optical_error(const NoiseConfig& noise, Rng& rng);

enum class Approach { BleWorldMap, BleCloudAnchor, Uwb };

const char* to_string(Approach a);
/// Accepts the CSV names (BLE_WORLDMAP, ...) in any case. Throws ConfigInvalid.
Approach approach_from_string(const std::string& text);

struct AnchorOutcome {
  std::string anchor_id;
  double position_error = 0.0;     ///< metres
  double orientation_error = 0.0;  ///< radians
};

struct RoomSwitchEvent {
  double timestamp = 0.0;
  std::string from_room;  ///< empty when leaving "no room"
  std::string to_room;
};

struct TrialRecord {
  Approach approach = Approach::Uwb;
  double environment_level = 0.0;
  std::uint64_t seed = 0;
  int trial_index = 0;
  int device_index = 0;
  bool success = false;
  std::optional<double> localization_delay;  ///< present iff success
  std::optional<double> time_to_stable;      ///< UWB: seconds of ranging
  std::vector<AnchorOutcome> anchors;        ///< empty unless success
  std::optional<RigidPose> reference_pose;   ///< UWB: world frame
  std::vector<RoomSwitchEvent> room_switches;
};

struct SimParams {
  NoiseConfig noise;
  StabilizerConfig stabilizer;
  HysteresisParams hysteresis;
  ProximityCalibration calibration;
  double dt = 0.1;
  double scan_interval = 1.0;
  double horizon = 300.0;
  std::int64_t anchor_ttl = kMaxTtlSeconds;
  /// Room the devices start in; empty picks the first room with a UWB beacon.
  std::string target_room;

  void validate() const;
};

/// Runs trials against one world. Owns the shared anchor store, which is
/// populated once at construction: room-scoped records and a map blob per
/// room for the BLE variants, and for each UWB beacon a beacon-scoped record
/// of an anchor co-located with the beacon.
class TrialRunner {
 public:
  TrialRunner(WorldModel world, SimParams params, std::uint64_t store_seed = 0);

  /// One device session. Throws ConfigInvalid on an invalid setup.
  TrialRecord run_trial(Approach approach, double environment_level, std::uint64_t seed) const;

  /// `device_count` sessions starting together. UWB sessions contend for the
  /// beacon's ranging slots; records come back in device order.
  std::vector<TrialRecord> run_sessions(Approach approach, double environment_level, std::uint64_t seed,
                                        int device_count) const;

  /// Device placements for a trial, exposed for tests.
  DeviceSession place_device(std::uint64_t seed, int device_index) const;

  const WorldModel& world() const { return world_; }
  const SimParams& params() const { return params_; }
  AnchorStore& store() const { return store_; }
  const std::string& target_room() const { return target_room_; }

 private:
  std::vector<TrialRecord> run_uwb(double environment_level, std::uint64_t seed, int device_count) const;
  TrialRecord run_ble(Approach approach, double environment_level, std::uint64_t seed, int device_index) const;

  WorldModel world_;
  SimParams params_;
  std::string target_room_;
  mutable AnchorStore store_;
  std::map<std::string, AnchorTruth> truth_by_store_id_;
};

/// Room-switch events for a device following `device.trajectory`, scanning
/// every `params.scan_interval` from t = 0 to `duration`.
std::vector<RoomSwitchEvent> simulate_room_walk(const WorldModel& world, const DeviceSession& device,
                                                const SimParams& params, double duration, Rng& rng);

}  // namespace beaconsync
