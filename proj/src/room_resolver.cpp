#include "beaconsync/room_resolver.hpp"

#include <cmath>
#include <limits>

#include "beaconsync/error.hpp"

namespace beaconsync {

void ProximityCalibration::validate() const {
  if (!(path_loss_exponent > 0.0)) throw ConfigInvalid("path_loss_exponent must be > 0");
  if (!(immediate_radius > 0.0 && immediate_radius < near_radius)) {
    throw ConfigInvalid("radii must satisfy 0 < immediate_radius < near_radius");
  }
}

const char* to_string(ProximityClass c) {
  switch (c) {
    case ProximityClass::Immediate: return "immediate";
    case ProximityClass::Near: return "near";
    case ProximityClass::Far: return "far";
  }
  return "unknown";
}

Proximity classify_proximity(double rssi, const ProximityCalibration& cal) {
  const double distance = std::pow(10.0, (cal.measured_power - rssi) / (10.0 * cal.path_loss_exponent));
  ProximityClass cls = ProximityClass::Far;
  if (distance < cal.immediate_radius) {
    cls = ProximityClass::Immediate;
  } else if (distance < cal.near_radius) {
    cls = ProximityClass::Near;
  }
  return {cls, distance};
}

double expected_rssi(double distance, const ProximityCalibration& cal) {
  return cal.measured_power - 10.0 * cal.path_loss_exponent * std::log10(distance);
}

void BeaconRegistry::add(const std::string& beacon_id, const std::string& room_id) {
  auto [it, inserted] = rooms_.emplace(beacon_id, room_id);
  if (!inserted && it->second != room_id) {
    throw ConfigInvalid("beacon " + beacon_id + " is already registered to room " + it->second);
  }
}

std::optional<std::string> BeaconRegistry::room_of(const std::string& beacon_id) const {
  auto it = rooms_.find(beacon_id);
  if (it == rooms_.end()) return std::nullopt;
  return it->second;
}

void HysteresisParams::validate() const {
  if (confirm_scans < 1) throw ConfigInvalid("hysteresis.confirm_scans must be >= 1");
  if (!(margin >= 0.0)) throw ConfigInvalid("hysteresis.margin must be >= 0");
}

RoomDecision update_room(std::span<const BeaconAdvertisement> scan, const BeaconRegistry& registry,
                         const RoomDecision& state, const HysteresisParams& hysteresis,
                         const ProximityCalibration& cal) {
  RoomDecision next = state;
  next.switched = false;
  next.dropped = 0;

  const BeaconAdvertisement* nearest = nullptr;
  double nearest_distance = std::numeric_limits<double>::infinity();
  std::map<std::string, double> room_best;
  for (const auto& adv : scan) {
    auto room = registry.room_of(adv.beacon_id);
    if (!room) {
      ++next.dropped;
      continue;
    }
    const double d = classify_proximity(adv.rssi, cal).distance;
    auto [it, inserted] = room_best.emplace(*room, d);
    if (!inserted && d < it->second) it->second = d;
    if (nearest == nullptr || d < nearest_distance ||
        (d == nearest_distance && adv.beacon_id < nearest->beacon_id)) {
      nearest = &adv;
      nearest_distance = d;
    }
  }
  if (nearest == nullptr) return next;

  const std::string winner = *registry.room_of(nearest->beacon_id);

  if (!next.current_room) {
    next.current_room = winner;
    next.candidate_room.reset();
    next.candidate_streak = 0;
    next.switched = true;
    return next;
  }

  if (winner == *next.current_room) {
    next.candidate_room.reset();
    next.candidate_streak = 0;
    return next;
  }

  auto current_it = room_best.find(*next.current_room);
  const double current_best =
      current_it == room_best.end() ? std::numeric_limits<double>::infinity() : current_it->second;
  if (current_best - nearest_distance < hysteresis.margin) {
    next.candidate_room.reset();
    next.candidate_streak = 0;
    return next;
  }

  if (next.candidate_room == winner) {
    ++next.candidate_streak;
  } else {
    next.candidate_room = winner;
    next.candidate_streak = 1;
  }
  if (next.candidate_streak >= hysteresis.confirm_scans) {
    next.current_room = winner;
    next.candidate_room.reset();
    next.candidate_streak = 0;
    next.switched = true;
  }
  return next;
}

}  // namespace beaconsync
