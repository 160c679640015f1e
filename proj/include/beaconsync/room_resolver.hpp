#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

namespace beaconsync {

struct BeaconAdvertisement {
  std::string beacon_id;
  double rssi = 0.0;  ///< dBm, in [-120, 0]
  double timestamp = 0.0;
};

inline constexpr int kMinRssi = -120;
inline constexpr int kMaxRssi = 0;

/// Log-distance path-loss calibration shared by the resolver and the simulator.
struct ProximityCalibration {
  double measured_power = -59.0;  ///< dBm at 1 m
  double path_loss_exponent = 2.0;
  double immediate_radius = 0.5;  ///< metres
  double near_radius = 4.0;       ///< metres

  void validate() const;
};

enum class ProximityClass { Immediate, Near, Far };

const char* to_string(ProximityClass c);

struct Proximity {
  ProximityClass proximity = ProximityClass::Far;
  double distance = 0.0;  ///< metres
};

/// distance = 10^((measured_power - rssi) / (10 n)), then bucketed by radius.
Proximity classify_proximity(double rssi, const ProximityCalibration& cal = {});

/// Expected RSSI at `distance` metres; the inverse of the distance model.
double expected_rssi(double distance, const ProximityCalibration& cal = {});

/// Many-to-one mapping from beacon to room.
class BeaconRegistry {
 public:
  void add(const std::string& beacon_id, const std::string& room_id);
  std::optional<std::string> room_of(const std::string& beacon_id) const;
  const std::map<std::string, std::string>& entries() const { return rooms_; }

 private:
  std::map<std::string, std::string> rooms_;
};

struct HysteresisParams {
  int confirm_scans = 3;  ///< consecutive qualifying scans before a switch
  double margin = 0.5;    ///< metres the candidate must beat the current room by

  void validate() const;
};

struct RoomDecision {
  std::optional<std::string> current_room;
  std::optional<std::string> candidate_room;
  int candidate_streak = 0;
  bool switched = false;  ///< this update changed current_room
  int dropped = 0;        ///< advertisements from unregistered beacons in this scan
};

/// Nearest-beacon room decision with streak-plus-margin hysteresis.
///
/// A scan qualifies for candidate room C when C owns the nearest beacon, C is
/// not the current room, and C's nearest beacon is closer than the current
/// room's nearest beacon by at least `margin` (a current room absent from the
/// scan counts as infinitely far). The switch happens on the
/// `confirm_scans`-th consecutive qualifying scan. Leaving None is immediate.
/// Scans with no registered beacon leave the room state untouched.
RoomDecision update_room(std::span<const BeaconAdvertisement> scan, const BeaconRegistry& registry,
                         const RoomDecision& state, const HysteresisParams& hysteresis = {},
                         const ProximityCalibration& cal = {});

}  // namespace beaconsync
