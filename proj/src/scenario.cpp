#include "beaconsync/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) {
    part = trim(part);
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

class LineError {
 public:
  LineError(int line, std::string key) : line_(line), key_(std::move(key)) {}
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigInvalid(fmt::format("key '{}' (line {}): {}", key_, line_, what));
  }

 private:
  int line_;
  std::string key_;
};

double parse_double(const std::string& text, const LineError& err) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) err.fail("'" + text + "' is not a number");
  return value;
}

std::int64_t parse_int(const std::string& text, const LineError& err) {
  std::int64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) err.fail("'" + text + "' is not an integer");
  return value;
}

bool valid_identifier(const std::string& id) {
  return !id.empty() && id.find_first_of(",;>@ \t") == std::string::npos;
}

using DoubleSetter = std::function<void(Scenario&, double)>;

const std::map<std::string, DoubleSetter>& double_keys() {
  static const std::map<std::string, DoubleSetter> keys = {
      {"dt", [](Scenario& s, double v) { s.params.dt = v; }},
      {"scan_interval", [](Scenario& s, double v) { s.params.scan_interval = v; }},
      {"horizon", [](Scenario& s, double v) { s.params.horizon = v; }},
      {"noise.uwb_post_transient_sigma", [](Scenario& s, double v) { s.params.noise.uwb_post_transient_sigma = v; }},
      {"noise.uwb_jitter_sigma", [](Scenario& s, double v) { s.params.noise.uwb_jitter_sigma = v; }},
      {"noise.uwb_transient_sigma", [](Scenario& s, double v) { s.params.noise.uwb_transient_sigma = v; }},
      {"noise.uwb_transient_mean_duration",
       [](Scenario& s, double v) { s.params.noise.uwb_transient_mean_duration = v; }},
      {"noise.uwb_transient_jitter_sigma",
       [](Scenario& s, double v) { s.params.noise.uwb_transient_jitter_sigma = v; }},
      {"noise.heading_sigma", [](Scenario& s, double v) { s.params.noise.heading_sigma = v; }},
      {"noise.heading_site_bias_sigma", [](Scenario& s, double v) { s.params.noise.heading_site_bias_sigma = v; }},
      {"noise.ble_rssi_sigma", [](Scenario& s, double v) { s.params.noise.ble_rssi_sigma = v; }},
      {"noise.optical_pos_sigma", [](Scenario& s, double v) { s.params.noise.optical_pos_sigma = v; }},
      {"noise.optical_rot_sigma", [](Scenario& s, double v) { s.params.noise.optical_rot_sigma = v; }},
      {"noise.optical_fail_level", [](Scenario& s, double v) { s.params.noise.optical_fail_level = v; }},
      {"noise.optical_delay_mean", [](Scenario& s, double v) { s.params.noise.optical_delay_mean = v; }},
      {"noise.optical_delay_sigma", [](Scenario& s, double v) { s.params.noise.optical_delay_sigma = v; }},
      {"noise.map_transfer_delay", [](Scenario& s, double v) { s.params.noise.map_transfer_delay = v; }},
      {"stabilizer.disparity_threshold", [](Scenario& s, double v) { s.params.stabilizer.disparity_threshold = v; }},
      {"stabilizer.stable_duration", [](Scenario& s, double v) { s.params.stabilizer.stable_duration = v; }},
      {"stabilizer.timeout", [](Scenario& s, double v) { s.params.stabilizer.timeout = v; }},
      {"hysteresis.margin", [](Scenario& s, double v) { s.params.hysteresis.margin = v; }},
      {"calibration.measured_power", [](Scenario& s, double v) { s.params.calibration.measured_power = v; }},
      {"calibration.path_loss_exponent",
       [](Scenario& s, double v) { s.params.calibration.path_loss_exponent = v; }},
      {"calibration.immediate_radius", [](Scenario& s, double v) { s.params.calibration.immediate_radius = v; }},
      {"calibration.near_radius", [](Scenario& s, double v) { s.params.calibration.near_radius = v; }},
  };
  return keys;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  WorldModel custom;
  bool has_custom_world = false;
  std::map<std::string, int> seen;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid(fmt::format("line {}: expected 'key = value', got '{}'", line_no, line));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const LineError err(line_no, key);
    if (value.empty()) err.fail("missing value");

    const bool repeatable = key == "room" || key == "beacon" || key == "anchor";
    if (!repeatable && seen[key]++ > 0) err.fail("given more than once");

    if (auto it = double_keys().find(key); it != double_keys().end()) {
      it->second(s, parse_double(value, err));
    } else if (key == "approaches" || key == "approach") {
      s.approaches.clear();
      for (const auto& name : split(value, ',')) {
        try {
          s.approaches.push_back(approach_from_string(name));
        } catch (const ConfigInvalid&) {
          err.fail("unknown approach '" + name + "'");
        }
      }
      if (s.approaches.empty()) err.fail("no approaches listed");
    } else if (key == "trials") {
      const auto v = parse_int(value, err);
      if (v < 1) err.fail("must be >= 1");
      s.trials = static_cast<int>(v);
    } else if (key == "seed") {
      const auto v = parse_int(value, err);
      if (v < 0) err.fail("must be >= 0");
      s.seed = static_cast<std::uint64_t>(v);
    } else if (key == "devices") {
      const auto v = parse_int(value, err);
      if (v < 1) err.fail("must be >= 1");
      s.devices = static_cast<int>(v);
    } else if (key == "jobs") {
      const auto v = parse_int(value, err);
      if (v < 1) err.fail("must be >= 1");
      s.jobs = static_cast<int>(v);
    } else if (key == "anchor_ttl") {
      s.params.anchor_ttl = parse_int(value, err);
    } else if (key == "hysteresis.confirm_scans") {
      s.params.hysteresis.confirm_scans = static_cast<int>(parse_int(value, err));
    } else if (key == "target_room") {
      s.params.target_room = value;
    } else if (key == "environment_levels") {
      s.environment_levels.clear();
      for (const auto& item : split(value, ',')) {
        const double c = parse_double(item, err);
        if (!(c >= 0.0 && c <= 1.0)) err.fail("levels must lie in [0, 1]");
        s.environment_levels.push_back(c);
      }
      if (s.environment_levels.empty()) err.fail("no levels listed");
    } else if (key == "room") {
      const auto w = words(value);
      if (w.size() != 5) err.fail("expected '<id> <x_min> <z_min> <x_max> <z_max>'");
      if (!valid_identifier(w[0])) err.fail("bad room id '" + w[0] + "'");
      custom.rooms.push_back({w[0], parse_double(w[1], err), parse_double(w[2], err), parse_double(w[3], err),
                              parse_double(w[4], err)});
      has_custom_world = true;
    } else if (key == "beacon") {
      const auto w = words(value);
      if (w.size() != 6) err.fail("expected '<id> <ble|uwb> <room> <x> <y> <z>'");
      if (!valid_identifier(w[0])) err.fail("bad beacon id '" + w[0] + "'");
      BeaconKind kind{};
      if (w[1] == "ble") {
        kind = BeaconKind::Ble;
      } else if (w[1] == "uwb") {
        kind = BeaconKind::Uwb;
      } else {
        err.fail("beacon kind must be 'ble' or 'uwb'");
      }
      custom.beacons.push_back({w[0], kind,
                                RigidPose::from_translation(
                                    {parse_double(w[3], err), parse_double(w[4], err), parse_double(w[5], err)}),
                                w[2]});
      has_custom_world = true;
    } else if (key == "anchor") {
      const auto w = words(value);
      if (w.size() != 6) err.fail("expected '<id> <room> <x> <y> <z> <yaw>'");
      if (!valid_identifier(w[0])) err.fail("bad anchor id '" + w[0] + "'");
      custom.anchors.push_back(
          {w[0], w[1],
           {rotation_about_y(parse_double(w[5], err)),
            Vec3(parse_double(w[2], err), parse_double(w[3], err), parse_double(w[4], err))}});
      has_custom_world = true;
    } else {
      err.fail("unknown key");
    }
  }

  if (has_custom_world) s.world = std::move(custom);
  s.world.validate();
  s.params.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

}  // namespace beaconsync
