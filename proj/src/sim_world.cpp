#include "beaconsync/sim_world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

constexpr double kPi = std::numbers::pi;

std::string device_name(int index) { return fmt::format("dev-{}", index); }

void require_non_negative(double value, const char* name) {
  if (!(value >= 0.0)) throw ConfigInvalid(fmt::format("noise.{} must be >= 0", name));
}

}  // namespace

// ---------------------------------------------------------------------------
// World model

void WorldModel::validate() const {
  if (!(environment_change_level >= 0.0 && environment_change_level <= 1.0)) {
    throw ConfigInvalid("environment_change_level must lie in [0, 1]");
  }
  std::set<std::string> ids;
  for (const auto& r : rooms) {
    if (!ids.insert("room:" + r.id).second) throw ConfigInvalid("duplicate room " + r.id);
    if (!(r.x_min < r.x_max && r.z_min < r.z_max)) throw ConfigInvalid("room " + r.id + " has empty bounds");
  }
  for (const auto& b : beacons) {
    if (!ids.insert("beacon:" + b.id).second) throw ConfigInvalid("duplicate beacon " + b.id);
    if (!find_room(b.room_id)) throw ConfigInvalid("beacon " + b.id + " names unknown room " + b.room_id);
    if (!b.true_pose.is_valid()) throw ConfigInvalid("beacon " + b.id + " has an invalid pose");
  }
  for (const auto& a : anchors) {
    if (!ids.insert("anchor:" + a.id).second) throw ConfigInvalid("duplicate anchor " + a.id);
    if (!find_room(a.room_id)) throw ConfigInvalid("anchor " + a.id + " names unknown room " + a.room_id);
    if (!a.true_pose.is_valid()) throw ConfigInvalid("anchor " + a.id + " has an invalid pose");
  }
}

const Room* WorldModel::find_room(const std::string& id) const {
  auto it = std::find_if(rooms.begin(), rooms.end(), [&](const Room& r) { return r.id == id; });
  return it == rooms.end() ? nullptr : &*it;
}

const Beacon* WorldModel::find_beacon(const std::string& id) const {
  auto it = std::find_if(beacons.begin(), beacons.end(), [&](const Beacon& b) { return b.id == id; });
  return it == beacons.end() ? nullptr : &*it;
}

const Beacon* WorldModel::uwb_beacon_in(const std::string& room_id) const {
  auto it = std::find_if(beacons.begin(), beacons.end(),
                         [&](const Beacon& b) { return b.kind == BeaconKind::Uwb && b.room_id == room_id; });
  return it == beacons.end() ? nullptr : &*it;
}

BeaconRegistry WorldModel::ble_registry() const {
  BeaconRegistry registry;
  for (const auto& b : beacons) {
    if (b.kind == BeaconKind::Ble) registry.add(b.id, b.room_id);
  }
  return registry;
}

WorldModel WorldModel::desk_scale() {
  WorldModel w;
  w.rooms = {{"lab-a", 0.0, 0.0, 6.0, 5.0}, {"lab-b", 6.0, 0.0, 12.0, 5.0}};
  auto at = [](double x, double y, double z) { return RigidPose::from_translation({x, y, z}); };
  w.beacons = {
      {"ble-a1", BeaconKind::Ble, at(1.0, 1.0, 2.5), "lab-a"},
      {"ble-a2", BeaconKind::Ble, at(3.0, 1.0, 4.8), "lab-a"},
      {"ble-b1", BeaconKind::Ble, at(11.0, 1.0, 2.5), "lab-b"},
      {"ble-b2", BeaconKind::Ble, at(9.0, 1.0, 0.2), "lab-b"},
      {"uwb-a", BeaconKind::Uwb, at(3.0, 0.8, 2.5), "lab-a"},
      {"uwb-b", BeaconKind::Uwb, at(9.0, 0.8, 2.5), "lab-b"},
  };
  w.anchors = {
      {"anchor-a", "lab-a", {rotation_about_y(0.3), Vec3(2.5, 0.8, 2.0)}},
      {"anchor-b", "lab-b", {rotation_about_y(-1.1), Vec3(9.5, 0.8, 3.0)}},
  };
  return w;
}

RigidPose true_reference_pose(const Beacon& beacon) {
  return RigidPose::from_translation(beacon.true_pose.translation());
}

// ---------------------------------------------------------------------------
// Noise and parameters

void NoiseConfig::validate() const {
  require_non_negative(uwb_post_transient_sigma, "uwb_post_transient_sigma");
  require_non_negative(uwb_jitter_sigma, "uwb_jitter_sigma");
  require_non_negative(uwb_transient_sigma, "uwb_transient_sigma");
  require_non_negative(uwb_transient_mean_duration, "uwb_transient_mean_duration");
  require_non_negative(uwb_transient_jitter_sigma, "uwb_transient_jitter_sigma");
  require_non_negative(heading_sigma, "heading_sigma");
  require_non_negative(heading_site_bias_sigma, "heading_site_bias_sigma");
  require_non_negative(ble_rssi_sigma, "ble_rssi_sigma");
  require_non_negative(optical_pos_sigma, "optical_pos_sigma");
  require_non_negative(optical_rot_sigma, "optical_rot_sigma");
  require_non_negative(optical_delay_mean, "optical_delay_mean");
  require_non_negative(optical_delay_sigma, "optical_delay_sigma");
  require_non_negative(map_transfer_delay, "map_transfer_delay");
  if (!(optical_fail_level > 0.0 && optical_fail_level <= 1.0)) {
    throw ConfigInvalid("noise.optical_fail_level must lie in (0, 1]");
  }
}

NoiseConfig NoiseConfig::noiseless() {
  NoiseConfig n;
  n.uwb_post_transient_sigma = 0.0;
  n.uwb_jitter_sigma = 0.0;
  n.uwb_transient_sigma = 0.0;
  n.uwb_transient_mean_duration = 0.0;
  n.uwb_transient_jitter_sigma = 0.0;
  n.heading_sigma = 0.0;
  n.heading_site_bias_sigma = 0.0;
  n.ble_rssi_sigma = 0.0;
  n.optical_pos_sigma = 0.0;
  n.optical_rot_sigma = 0.0;
  n.optical_delay_sigma = 0.0;
  return n;
}

void SimParams::validate() const {
  noise.validate();
  stabilizer.validate();
  hysteresis.validate();
  calibration.validate();
  if (!(dt > 0.0)) throw ConfigInvalid("dt must be > 0");
  if (!(scan_interval > 0.0)) throw ConfigInvalid("scan_interval must be > 0");
  if (!(horizon > 0.0)) throw ConfigInvalid("horizon must be > 0");
  if (anchor_ttl <= 0 || anchor_ttl > kMaxTtlSeconds) throw ConfigInvalid("anchor_ttl must lie in (0, 31536000]");
}

// ---------------------------------------------------------------------------
// Devices

Vec3 DeviceSession::position_at(double t) const {
  if (trajectory.empty()) return Vec3::Zero();
  if (t <= trajectory.front().time) return trajectory.front().position;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i - 1];
    const auto& b = trajectory[i];
    if (t <= b.time) {
      const double span = b.time - a.time;
      const double f = span > 0.0 ? (t - a.time) / span : 1.0;
      return a.position + f * (b.position - a.position);
    }
  }
  return trajectory.back().position;
}

double DeviceSession::true_azimuth() const {
  const Vec3 forward = -camera_orientation.col(2);
  return normalize_angle(std::atan2(forward.z(), forward.x()));
}

Mat3 camera_orientation(double azimuth, double pitch, double roll) {
  // Yaw of -(azimuth + pi/2) about +y takes the camera's -z onto
  // (cos azimuth, 0, sin azimuth), i.e. azimuth clockwise from north.
  return rotation_about_y(-(azimuth + kPi / 2.0)) * axis_angle(Vec3::UnitX(), pitch) *
         axis_angle(Vec3::UnitZ(), roll);
}

RigidPose make_session_frame(double yaw, const Vec3& translation) { return {rotation_about_y(yaw), translation}; }

// ---------------------------------------------------------------------------
// Sensors

std::vector<BeaconAdvertisement> sample_ble_scan(const DeviceSession& device, double t, const WorldModel& world,
                                                 const NoiseConfig& noise, const ProximityCalibration& cal,
                                                 Rng& rng, double range) {
  std::vector<BeaconAdvertisement> scan;
  const Vec3 p = device.position_at(t);
  for (const auto& b : world.beacons) {
    if (b.kind != BeaconKind::Ble) continue;
    const double d = (b.true_pose.translation() - p).norm();
    if (d > range) continue;
    const double rssi = expected_rssi(std::max(d, 1e-3), cal) + rng.normal(0.0, noise.ble_rssi_sigma);
    scan.push_back({b.id, std::clamp(rssi, static_cast<double>(kMinRssi), static_cast<double>(kMaxRssi)), t});
  }
  return scan;
}

UwbRangingStream::UwbRangingStream(const DeviceSession& device, const Beacon& beacon, const NoiseConfig& noise,
                                   Rng rng)
    : device_id_(device.device_id),
      beacon_id_(beacon.id),
      true_position_(device.session_frame.apply(beacon.true_pose.translation())),
      noise_(noise),
      rng_(rng) {
  transient_duration_ =
      std::max(0.0, rng_.normal(noise_.uwb_transient_mean_duration, noise_.uwb_transient_jitter_sigma));
  offset_ = rng_.normal_vec3(noise_.uwb_post_transient_sigma);
}

RangingSample UwbRangingStream::sample(const RangingScheduler& scheduler, double elapsed_since_ranging_start,
                                       double now) {
  if (!scheduler.holds_slot(beacon_id_, device_id_)) {
    throw NoRangingSlot(device_id_ + " holds no ranging slot on " + beacon_id_);
  }
  if (elapsed_since_ranging_start < transient_duration_) {
    return {true_position_ + rng_.normal_vec3(noise_.uwb_transient_sigma), now};
  }
  return {true_position_ + offset_ + rng_.normal_vec3(noise_.uwb_jitter_sigma), now};
}

HeadingReading sample_heading(const DeviceSession& device, double site_bias, double t, const NoiseConfig& noise,
                              Rng& rng) {
  return HeadingReading::make(device.true_azimuth() + site_bias + rng.normal(0.0, noise.heading_sigma), t);
}

double optical_success_probability(double change_level, const NoiseConfig& noise) {
  return std::clamp(1.0 - change_level / noise.optical_fail_level, 0.0, 1.0);
}

OpticalError draw_optical_error(const NoiseConfig& noise, Rng& rng) {
  OpticalError e;
  e.position_offset = rng.normal_vec3(noise.optical_pos_sigma);
  const Vec3 axis = rng.unit_vector();
  const double angle = std::abs(rng.normal(0.0, noise.optical_rot_sigma));
  e.rotation_offset = axis_angle(axis, angle);
  return e;
}

std::optional<OpticalError> attempt_optical_localization(double change_level, const NoiseConfig& noise, Rng& rng) {
  const double u = rng.uniform();
  if (!(u < optical_success_probability(change_level, noise))) return std::nullopt;
  return draw_optical_error(noise, rng);
}

const char* to_string(Approach a) {
  switch (a) {
    case Approach::BleWorldMap: return "BLE_WORLDMAP";
    case Approach::BleCloudAnchor: return "BLE_CLOUD_ANCHOR";
    case Approach::Uwb: return "UWB";
  }
  return "UNKNOWN";
}

Approach approach_from_string(const std::string& text) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  for (Approach a : {Approach::BleWorldMap, Approach::BleCloudAnchor, Approach::Uwb}) {
    if (upper == to_string(a)) return a;
  }
  throw ConfigInvalid("unknown approach '" + text + "'");
}

// ---------------------------------------------------------------------------
// Trials

TrialRunner::TrialRunner(WorldModel world, SimParams params, std::uint64_t store_seed)
    : world_(std::move(world)), params_(std::move(params)), store_(store_seed) {
  world_.validate();
  params_.validate();

  target_room_ = params_.target_room;
  if (target_room_.empty()) {
    for (const auto& r : world_.rooms) {
      if (world_.uwb_beacon_in(r.id)) {
        target_room_ = r.id;
        break;
      }
    }
    if (target_room_.empty() && !world_.rooms.empty()) target_room_ = world_.rooms.front().id;
  }
  if (!world_.find_room(target_room_)) throw ConfigInvalid("target_room '" + target_room_ + "' is not a room");

  constexpr double kSetupTime = 0.0;
  for (const auto& a : world_.anchors) {
    const auto id = store_.host_anchor(RoomScope{a.room_id}, a.true_pose.to_array(), a.true_pose.translation(),
                                       params_.anchor_ttl, kSetupTime);
    truth_by_store_id_.emplace(id, a);
  }
  for (const auto& r : world_.rooms) {
    nlohmann::json map = {{"room_id", r.id}, {"anchors", nlohmann::json::array()}};
    for (const auto& a : world_.anchors) {
      if (a.room_id == r.id) map["anchors"].push_back({{"id", a.id}, {"pose", a.true_pose.to_array()}});
    }
    if (map["anchors"].empty()) continue;
    const std::string text = map.dump();
    store_.upload_map(r.id, std::vector<std::uint8_t>(text.begin(), text.end()), 0, kSetupTime);
  }
  for (const auto& b : world_.beacons) {
    if (b.kind != BeaconKind::Uwb) continue;
    const RigidPose reference = true_reference_pose(b);
    const RelativeTransform rel = host_relative(reference, reference);
    const auto id = store_.host_anchor(BeaconScope{b.id}, rel.offset().to_array(), std::nullopt,
                                       params_.anchor_ttl, kSetupTime);
    truth_by_store_id_.emplace(id, AnchorTruth{b.id + "/colocated", b.room_id, reference});
  }
}

DeviceSession TrialRunner::place_device(std::uint64_t seed, int device_index) const {
  Rng rng = Rng::stream(seed, fmt::format("placement/{}", device_index));
  DeviceSession d;
  d.device_id = device_name(device_index);

  const double yaw = rng.uniform(0.0, 2.0 * kPi);
  const Vec3 offset(rng.uniform(-5.0, 5.0), rng.uniform(-1.0, 1.0), rng.uniform(-5.0, 5.0));
  d.session_frame = make_session_frame(yaw, offset);

  const Room& room = *world_.find_room(target_room_);
  Vec3 focus = room.center(0.0);
  if (const Beacon* uwb = world_.uwb_beacon_in(target_room_)) focus = uwb->true_pose.translation();
  const double radius = rng.uniform(1.0, 2.5);
  const double bearing = rng.uniform(0.0, 2.0 * kPi);
  const double height = rng.uniform(1.2, 1.6);
  constexpr double kWallMargin = 0.2;
  Vec3 p(focus.x() + radius * std::cos(bearing), height, focus.z() + radius * std::sin(bearing));
  p.x() = std::clamp(p.x(), room.x_min + kWallMargin, room.x_max - kWallMargin);
  p.z() = std::clamp(p.z(), room.z_min + kWallMargin, room.z_max - kWallMargin);
  d.trajectory = {{0.0, p}};

  const double azimuth = rng.uniform(0.0, 2.0 * kPi);
  const double pitch = rng.uniform(-0.6, 0.6);
  const double roll = rng.uniform(-0.3, 0.3);
  d.camera_orientation = camera_orientation(azimuth, pitch, roll);
  return d;
}

std::vector<TrialRecord> TrialRunner::run_sessions(Approach approach, double environment_level, std::uint64_t seed,
                                                   int device_count) const {
  if (device_count < 1) throw ConfigInvalid("devices must be >= 1");
  if (!(environment_level >= 0.0 && environment_level <= 1.0)) {
    throw ConfigInvalid("environment level must lie in [0, 1]");
  }
  if (approach == Approach::Uwb) return run_uwb(environment_level, seed, device_count);
  std::vector<TrialRecord> out;
  for (int d = 0; d < device_count; ++d) out.push_back(run_ble(approach, environment_level, seed, d));
  return out;
}

TrialRecord TrialRunner::run_trial(Approach approach, double environment_level, std::uint64_t seed) const {
  return run_sessions(approach, environment_level, seed, 1).front();
}

namespace {

struct UwbDevice {
  DeviceSession session;
  UwbRangingStream stream;
  UwbStabilizer stabilizer;
  Rng heading_rng;
  TrialRecord record;
  bool ranging = false;
  bool done = false;
  long start_tick = 0;
};

}  // namespace

std::vector<TrialRecord> TrialRunner::run_uwb(double environment_level, std::uint64_t seed, int device_count) const {
  const Beacon* beacon = world_.uwb_beacon_in(target_room_);
  if (!beacon) throw ConfigInvalid("room " + target_room_ + " has no UWB beacon");

  const NoiseConfig& noise = params_.noise;
  const double site_bias = Rng::stream(seed, "heading/site").normal(0.0, noise.heading_site_bias_sigma);

  std::vector<UwbDevice> devices;
  devices.reserve(static_cast<std::size_t>(device_count));
  for (int i = 0; i < device_count; ++i) {
    DeviceSession session = place_device(seed, i);
    UwbRangingStream stream(session, *beacon, noise, Rng::stream(seed, fmt::format("ranging/{}", i)));
    TrialRecord rec;
    rec.approach = Approach::Uwb;
    rec.environment_level = environment_level;
    rec.seed = seed;
    rec.device_index = i;
    devices.push_back({std::move(session), std::move(stream), UwbStabilizer(params_.stabilizer),
                       Rng::stream(seed, fmt::format("heading/{}", i)), std::move(rec)});
  }

  RangingScheduler scheduler;
  for (auto& d : devices) {
    if (scheduler.acquire(beacon->id, d.session.device_id, 0.0).granted) d.ranging = true;
  }

  auto index_of = [&](const std::string& device_id) {
    for (std::size_t i = 0; i < devices.size(); ++i) {
      if (devices[i].session.device_id == device_id) return i;
    }
    throw Error("Internal", "unknown device " + device_id);
  };

  // Returns the device promoted into the freed slot, if any.
  auto step = [&](UwbDevice& d, long tick, double t) -> std::optional<std::string> {
    if (!d.stabilizer.state().terminal()) {
      const auto sample = d.stream.sample(scheduler, static_cast<double>(tick - d.start_tick) * params_.dt, t);
      const auto& state = d.stabilizer.push(sample);
      if (state.phase == StabilizerPhase::TimedOut) {
        d.stabilizer.reset();
        return std::nullopt;
      }
      if (state.phase != StabilizerPhase::Stable) return std::nullopt;
    }

    const HeadingReading heading = sample_heading(d.session, site_bias, t, noise, d.heading_rng);
    Mat3 north;
    try {
      north = north_aligned_orientation(d.session.camera_in_session(t), heading);
    } catch (const DegenerateAzimuth&) {
      return std::nullopt;  // keep the stable position, retry the heading next tick
    }
    const RigidPose reference = make_reference_pose(d.stabilizer.state().position, north);
    const RigidPose session_to_world = invert(d.session.session_frame);

    for (const auto& id : store_.list_anchors(BeaconScope{beacon->id}, std::nullopt, t)) {
      const AnchorRecord stored = store_.get_anchor(id, t);
      const RelativeTransform rel(RigidPose::from_array(stored.payload));
      const RigidPose resolved = compose(session_to_world, resolve_anchor(reference, rel));
      const AnchorTruth& truth = truth_by_store_id_.at(id);
      d.record.anchors.push_back({truth.id, (resolved.translation() - truth.true_pose.translation()).norm(),
                                  rotation_angle_between(resolved.rotation(), truth.true_pose.rotation())});
    }
    d.record.success = !d.record.anchors.empty();
    if (d.record.success) d.record.localization_delay = t;
    d.record.time_to_stable = d.stabilizer.state().stabilized_at - static_cast<double>(d.start_tick) * params_.dt;
    d.record.reference_pose = compose(session_to_world, reference);
    d.done = true;
    d.ranging = false;
    return scheduler.release(beacon->id, d.session.device_id, t);
  };

  const auto last_tick = static_cast<long>(std::floor(params_.horizon / params_.dt + 1e-9));
  for (long tick = 0; tick <= last_tick; ++tick) {
    const double t = static_cast<double>(tick) * params_.dt;
    std::vector<std::string> promoted;
    for (auto& d : devices) {
      if (!d.ranging || d.done) continue;
      if (auto next = step(d, tick, t)) promoted.push_back(*next);
    }
    // Promoted devices start ranging in the tick their slot frees up.
    for (std::size_t i = 0; i < promoted.size(); ++i) {
      auto& d = devices[index_of(promoted[i])];
      d.ranging = true;
      d.start_tick = tick;
      if (auto next = step(d, tick, t)) promoted.push_back(*next);
    }
    if (std::all_of(devices.begin(), devices.end(), [](const UwbDevice& d) { return d.done; })) break;
  }

  std::vector<TrialRecord> out;
  out.reserve(devices.size());
  for (auto& d : devices) {
    if (!d.record.success) {
      d.record.anchors.clear();
      d.record.localization_delay.reset();
    }
    out.push_back(std::move(d.record));
  }
  return out;
}

TrialRecord TrialRunner::run_ble(Approach approach, double environment_level, std::uint64_t seed,
                                 int device_index) const {
  const DeviceSession session = place_device(seed, device_index);
  Rng rssi_rng = Rng::stream(seed, fmt::format("rssi/{}", device_index));
  Rng optical_rng = Rng::stream(seed, fmt::format("optical/{}", device_index));
  Rng latency_rng = Rng::stream(seed, fmt::format("latency/{}", device_index));
  const NoiseConfig& noise = params_.noise;
  const BeaconRegistry registry = world_.ble_registry();

  TrialRecord rec;
  rec.approach = approach;
  rec.environment_level = environment_level;
  rec.seed = seed;
  rec.device_index = device_index;

  const RigidPose session_to_world = invert(session.session_frame);
  RoomDecision state;
  const auto last_scan = static_cast<long>(std::floor(params_.horizon / params_.scan_interval + 1e-9));
  for (long k = 0; k <= last_scan; ++k) {
    const double t = static_cast<double>(k) * params_.scan_interval;
    const auto scan = sample_ble_scan(session, t, world_, noise, params_.calibration, rssi_rng);
    const RoomDecision next = update_room(scan, registry, state, params_.hysteresis, params_.calibration);
    if (next.switched) {
      rec.room_switches.push_back({t, state.current_room.value_or(""), *next.current_room});
    }
    state = next;
    if (!next.switched) continue;

    const std::string& room = *state.current_room;
    // Anchors known for the room, as (id, truth) pairs.
    std::vector<AnchorTruth> targets;
    double query_delay = 0.0;
    if (approach == Approach::BleCloudAnchor) {
      // Only nearby anchors are resolved: those around the nearest registered beacon.
      const auto nearest = std::min_element(scan.begin(), scan.end(), [](const auto& a, const auto& b) {
        return std::tie(b.rssi, a.beacon_id) < std::tie(a.rssi, b.beacon_id);
      });
      std::optional<NearFilter> near;
      if (const Beacon* b = world_.find_beacon(nearest->beacon_id)) {
        constexpr double kNearbyRadius = 10.0;
        near = NearFilter{b->true_pose.translation(), kNearbyRadius};
      }
      for (const auto& id : store_.list_anchors(RoomScope{room}, near, t)) targets.push_back(truth_by_store_id_.at(id));
    } else {
      try {
        const MapDownload map = store_.download_map(room);
        const auto doc = nlohmann::json::parse(map.bytes.begin(), map.bytes.end());
        for (const auto& entry : doc.at("anchors")) {
          const auto id = entry.at("id").get<std::string>();
          auto it = std::find_if(world_.anchors.begin(), world_.anchors.end(),
                                 [&](const AnchorTruth& a) { return a.id == id; });
          if (it != world_.anchors.end()) targets.push_back(*it);
        }
        query_delay = noise.map_transfer_delay;
      } catch (const NoMap&) {
      }
    }
    if (targets.empty()) continue;

    // A map or anchor set from a neighbouring room cannot relocalize this session.
    const Room* actual = world_.find_room(room);
    if (!actual || !actual->contains(session.position_at(t))) continue;

    const auto first = attempt_optical_localization(environment_level, noise, optical_rng);
    if (!first) break;
    const double relocalize =
        std::max(0.5, latency_rng.normal(noise.optical_delay_mean * (1.0 + environment_level), noise.optical_delay_sigma));
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const OpticalError err = i == 0 ? *first : draw_optical_error(noise, optical_rng);
      // The session sees the perturbed anchor in its own frame; map it back to world.
      const RigidPose in_session = compose(session.session_frame, err.apply(targets[i].true_pose));
      const RigidPose resolved = compose(session_to_world, in_session);
      rec.anchors.push_back({targets[i].id, (resolved.translation() - targets[i].true_pose.translation()).norm(),
                             rotation_angle_between(resolved.rotation(), targets[i].true_pose.rotation())});
    }
    rec.success = true;
    rec.localization_delay = t + query_delay + relocalize;
    break;
  }
  return rec;
}

std::vector<RoomSwitchEvent> simulate_room_walk(const WorldModel& world, const DeviceSession& device,
                                                const SimParams& params, double duration, Rng& rng) {
  const BeaconRegistry registry = world.ble_registry();
  std::vector<RoomSwitchEvent> events;
  RoomDecision state;
  const auto last_scan = static_cast<long>(std::floor(duration / params.scan_interval + 1e-9));
  for (long k = 0; k <= last_scan; ++k) {
    const double t = static_cast<double>(k) * params.scan_interval;
    const auto scan = sample_ble_scan(device, t, world, params.noise, params.calibration, rng);
    const RoomDecision next = update_room(scan, registry, state, params.hysteresis, params.calibration);
    if (next.switched) events.push_back({t, state.current_room.value_or(""), *next.current_room});
    state = next;
  }
  return events;
}

}  // namespace beaconsync
