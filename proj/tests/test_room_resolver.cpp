#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "beaconsync/error.hpp"
#include "beaconsync/room_resolver.hpp"
#include "beaconsync/sim_world.hpp"

using namespace beaconsync;

namespace {

BeaconRegistry two_rooms() {
  BeaconRegistry r;
  r.add("a1", "A");
  r.add("a2", "A");
  r.add("b1", "B");
  r.add("b2", "B");
  return r;
}

// Brute-force nearest room: smallest path-loss distance, ties to the smaller id.
std::optional<std::string> nearest_room(const std::vector<BeaconAdvertisement>& scan, const BeaconRegistry& reg) {
  double best = std::numeric_limits<double>::infinity();
  std::string best_id;
  for (const auto& a : scan) {
    if (!reg.room_of(a.beacon_id)) continue;
    const double d = std::pow(10.0, (-59.0 - a.rssi) / 20.0);
    if (d < best || (d == best && a.beacon_id < best_id)) {
      best = d;
      best_id = a.beacon_id;
    }
  }
  if (best_id.empty()) return std::nullopt;
  return reg.room_of(best_id);
}

std::vector<BeaconAdvertisement> random_scan(std::mt19937_64& gen) {
  static const char* ids[] = {"a1", "a2", "b1", "b2", "zz"};
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_int_distribution<int> rssi(-100, -40);
  std::bernoulli_distribution keep(0.6);
  std::vector<BeaconAdvertisement> scan;
  const int n = count(gen);
  for (int i = 0; i < n; ++i) {
    for (const char* id : ids) {
      if (keep(gen)) scan.push_back({id, static_cast<double>(rssi(gen)), 0.0});
      if (static_cast<int>(scan.size()) >= n) break;
    }
  }
  return scan;
}

int count_switches(const std::vector<std::vector<BeaconAdvertisement>>& scans, const BeaconRegistry& reg,
                   const HysteresisParams& h, bool skip_cold_start) {
  RoomDecision s;
  int n = 0;
  for (const auto& scan : scans) {
    const bool had_room = s.current_room.has_value();
    s = update_room(scan, reg, s, h);
    if (s.switched && (had_room || !skip_cold_start)) ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("ble_room_resolver") {
  TEST_CASE("classify_proximity pinned values") {
    const auto at_power = classify_proximity(-59);
    CHECK(at_power.distance == 1.0);
    CHECK(at_power.proximity == ProximityClass::Near);

    const auto far = classify_proximity(-79);
    CHECK(far.distance == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(far.proximity == ProximityClass::Far);

    const auto close = classify_proximity(-49);
    CHECK(close.distance == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
    CHECK(close.proximity == ProximityClass::Immediate);
  }

  TEST_CASE("distance strictly decreasing in rssi and classes follow the radii") {
    const ProximityCalibration cal;
    double previous = std::numeric_limits<double>::infinity();
    for (double rssi = kMinRssi; rssi <= kMaxRssi; rssi += 0.25) {
      const Proximity p = classify_proximity(rssi, cal);
      CHECK(p.distance < previous);
      previous = p.distance;
      const ProximityClass want = p.distance < cal.immediate_radius ? ProximityClass::Immediate
                                  : p.distance < cal.near_radius    ? ProximityClass::Near
                                                                    : ProximityClass::Far;
      CHECK(p.proximity == want);
      CHECK(classify_proximity(expected_rssi(p.distance, cal), cal).distance ==
            doctest::Approx(p.distance).epsilon(1e-12));
    }
  }

  TEST_CASE("calibration and hysteresis validation") {
    CHECK_THROWS_AS((ProximityCalibration{-59, 0.0, 0.5, 4.0}.validate()), ConfigInvalid);
    CHECK_THROWS_AS((ProximityCalibration{-59, 2.0, 4.0, 4.0}.validate()), ConfigInvalid);
    CHECK_THROWS_AS((HysteresisParams{0, 0.5}.validate()), ConfigInvalid);
    CHECK_THROWS_AS((HysteresisParams{3, -0.1}.validate()), ConfigInvalid);
    BeaconRegistry r;
    r.add("x", "A");
    CHECK_NOTHROW(r.add("x", "A"));
    CHECK_THROWS_AS(r.add("x", "B"), ConfigInvalid);
  }

  TEST_CASE("cold start switches immediately") {
    const auto reg = two_rooms();
    const std::vector<BeaconAdvertisement> scan = {{"a1", -70, 0}, {"b1", -60, 0}};
    const RoomDecision d = update_room(scan, reg, {});
    CHECK(d.switched);
    CHECK(d.current_room == "B");
    CHECK(d.candidate_streak == 0);
  }

  TEST_CASE("empty scan and unknown beacons leave state unchanged") {
    const auto reg = two_rooms();
    RoomDecision s;
    s.current_room = "A";
    s.candidate_room = "B";
    s.candidate_streak = 2;
    const RoomDecision e = update_room({}, reg, s);
    CHECK(e.current_room == "A");
    CHECK(e.candidate_room == "B");
    CHECK(e.candidate_streak == 2);
    CHECK_FALSE(e.switched);

    const std::vector<BeaconAdvertisement> unknown = {{"q", -40, 0}, {"r", -41, 0}};
    const RoomDecision u = update_room(unknown, reg, s);
    CHECK(u.dropped == 2);
    CHECK(u.candidate_streak == 2);
    CHECK(u.current_room == "A");
  }

  TEST_CASE("switch after k confirming scans that beat the margin") {
    const auto reg = two_rooms();
    RoomDecision s;
    s.current_room = "A";
    // b1 at 1 m, a1 at 10 m.
    const std::vector<BeaconAdvertisement> scan = {{"a1", -79, 0}, {"b1", -59, 0}};
    s = update_room(scan, reg, s);
    CHECK(s.candidate_room == "B");
    CHECK(s.candidate_streak == 1);
    CHECK_FALSE(s.switched);
    s = update_room(scan, reg, s);
    CHECK(s.candidate_streak == 2);
    s = update_room(scan, reg, s);
    CHECK(s.switched);
    CHECK(s.current_room == "B");
    CHECK_FALSE(s.candidate_room.has_value());
    CHECK(s.candidate_streak == 0);
  }

  TEST_CASE("a winning scan inside the margin resets the streak") {
    const auto reg = two_rooms();
    RoomDecision s;
    s.current_room = "A";
    const std::vector<BeaconAdvertisement> clear = {{"a1", -79, 0}, {"b1", -59, 0}};
    // b1 at 1.0 m, a1 at ~1.12 m: B wins but by less than 0.5 m.
    const std::vector<BeaconAdvertisement> marginal = {{"a1", -60, 0}, {"b1", -59, 0}};
    s = update_room(clear, reg, s);
    s = update_room(clear, reg, s);
    s = update_room(marginal, reg, s);
    CHECK(s.candidate_streak == 0);
    CHECK(s.current_room == "A");
  }

  TEST_CASE("current room missing from the scan counts as infinitely far") {
    const auto reg = two_rooms();
    RoomDecision s;
    s.current_room = "A";
    const std::vector<BeaconAdvertisement> only_b = {{"b1", -90, 0}};
    for (int i = 0; i < 3; ++i) s = update_room(only_b, reg, s);
    CHECK(s.current_room == "B");
  }

  TEST_CASE("ties go to the smallest beacon id") {
    BeaconRegistry reg;
    reg.add("beta", "B");
    reg.add("alpha", "A");
    const std::vector<BeaconAdvertisement> scan = {{"beta", -65, 0}, {"alpha", -65, 0}};
    CHECK(update_room(scan, reg, {}).current_room == "A");
  }

  TEST_CASE("boundary flicker: no switches under defaults, one per scan without hysteresis") {
    const auto reg = two_rooms();
    std::vector<std::vector<BeaconAdvertisement>> scans;
    for (int i = 0; i < 100; ++i) {
      const bool a_wins = i % 2 == 0;
      scans.push_back({{"a1", a_wins ? -64.0 : -65.0, 0}, {"b1", a_wins ? -65.0 : -64.0, 0}});
    }
    CHECK(count_switches(scans, reg, {}, true) == 0);
    CHECK(count_switches(scans, reg, {1, 0.0}, true) == 99);
  }

  TEST_CASE("k=1, margin=0 is the brute-force nearest room") {
    const auto reg = two_rooms();
    std::mt19937_64 gen(21);
    RoomDecision s;
    for (int i = 0; i < 5000; ++i) {
      const auto scan = random_scan(gen);
      const auto before = s.current_room;
      s = update_room(scan, reg, s, {1, 0.0});
      const auto want = nearest_room(scan, reg);
      if (want) {
        REQUIRE(s.current_room == want);
      } else {
        REQUIRE(s.current_room == before);
      }
    }
  }

  TEST_CASE("hysteresis never switches more than the raw nearest room") {
    const auto reg = two_rooms();
    std::mt19937_64 gen(22);
    std::uniform_int_distribution<int> k(1, 5);
    std::uniform_real_distribution<double> margin(0.0, 3.0);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<std::vector<BeaconAdvertisement>> scans;
      for (int i = 0; i < 100; ++i) scans.push_back(random_scan(gen));
      const HysteresisParams h{k(gen), margin(gen)};
      CHECK(count_switches(scans, reg, h, false) <= count_switches(scans, reg, {1, 0.0}, false));
    }
  }

  TEST_CASE("update is pure") {
    const auto reg = two_rooms();
    std::mt19937_64 gen(23);
    RoomDecision s;
    for (int i = 0; i < 500; ++i) {
      const auto scan = random_scan(gen);
      const RoomDecision x = update_room(scan, reg, s);
      const RoomDecision y = update_room(scan, reg, s);
      REQUIRE(x.current_room == y.current_room);
      REQUIRE(x.candidate_room == y.candidate_room);
      REQUIRE(x.candidate_streak == y.candidate_streak);
      REQUIRE(x.switched == y.switched);
      REQUIRE(x.candidate_streak >= 0);
      if (x.switched) REQUIRE(x.current_room != s.current_room);
      s = x;
    }
  }

  TEST_CASE("walking from one room to the next switches exactly once") {
    const WorldModel world = WorldModel::desk_scale();
    SimParams params;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      DeviceSession device;
      device.device_id = "walker";
      device.trajectory = {{0.0, {3.0, 1.2, 2.5}}, {10.0, {3.0, 1.2, 2.5}}, {40.0, {9.0, 1.2, 2.5}}};
      Rng rng = Rng::stream(seed, "walk");
      const auto events = simulate_room_walk(world, device, params, 60.0, rng);
      int moves = 0;
      for (const auto& e : events) moves += e.from_room.empty() ? 0 : 1;
      CHECK(moves == 1);
      REQUIRE_FALSE(events.empty());
      CHECK(events.front().to_room == "lab-a");
      CHECK(events.back().to_room == "lab-b");
    }
  }
}
