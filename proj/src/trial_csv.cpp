#include "beaconsync/trial_csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::vector<std::string> split_cells(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      cells.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  cells.push_back(current);
  return cells;
}

double to_double(const std::string& s, const char* column, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaMismatch(fmt::format("line {}: column {} holds '{}', not a number", line, column, s));
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& s, const char* column, int line) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaMismatch(fmt::format("line {}: column {} holds '{}', not an integer", line, column, s));
  }
  return v;
}

std::optional<double> to_optional(const std::string& s, const char* column, int line) {
  if (s.empty()) return std::nullopt;
  return to_double(s, column, line);
}

std::string encode_switches(const std::vector<RoomSwitchEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    if (!out.empty()) out += ';';
    out += fmt::format("{}@{}>{}", e.timestamp, e.from_room.empty() ? "-" : e.from_room, e.to_room);
  }
  return out;
}

std::vector<RoomSwitchEvent> decode_switches(const std::string& text, int line) {
  std::vector<RoomSwitchEvent> events;
  if (text.empty()) return events;
  for (const auto& item : split_cells(text, ';')) {
    const auto at = item.find('@');
    const auto arrow = item.find('>');
    if (at == std::string::npos || arrow == std::string::npos || arrow < at) {
      throw SchemaMismatch(fmt::format("line {}: malformed room switch '{}'", line, item));
    }
    RoomSwitchEvent e;
    e.timestamp = to_double(item.substr(0, at), "room_switches", line);
    e.from_room = item.substr(at + 1, arrow - at - 1);
    if (e.from_room == "-") e.from_room.clear();
    e.to_room = item.substr(arrow + 1);
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace

const std::vector<std::string>& trial_csv_columns() {
  static const std::vector<std::string> columns = {
      "approach",       "environment_level", "trial",   "device",     "seed",
      "success",        "localization_delay_s", "time_to_stable_s", "anchor_count", "position_error_m",
      "orientation_error_rad", "ref_r00", "ref_r01", "ref_r02", "ref_r10",
      "ref_r11",        "ref_r12",           "ref_r20", "ref_r21",    "ref_r22",
      "ref_tx",         "ref_ty",            "ref_tz",  "room_switches",
  };
  return columns;
}

TrialRow to_row(const TrialRecord& r) {
  TrialRow row;
  row.approach = r.approach;
  row.environment_level = r.environment_level;
  row.trial = r.trial_index;
  row.device = r.device_index;
  row.seed = r.seed;
  row.success = r.success;
  row.localization_delay = r.localization_delay;
  row.time_to_stable = r.time_to_stable;
  row.anchor_count = static_cast<int>(r.anchors.size());
  if (!r.anchors.empty()) {
    double pos = 0.0;
    double rot = 0.0;
    for (const auto& a : r.anchors) {
      pos += a.position_error;
      rot += a.orientation_error;
    }
    row.position_error = pos / static_cast<double>(r.anchors.size());
    row.orientation_error = rot / static_cast<double>(r.anchors.size());
  }
  row.reference_pose = r.reference_pose;
  row.room_switches = r.room_switches;
  return row;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kTrialsSchemaLine << '\n';
  const auto& columns = trial_csv_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}", to_string(r.approach), r.environment_level, r.trial,
                       r.device, r.seed, r.success ? 1 : 0, cell(r.localization_delay), cell(r.time_to_stable),
                       r.anchor_count, cell(r.position_error), cell(r.orientation_error));
    if (r.reference_pose) {
      for (double v : r.reference_pose->to_array()) out << ',' << fmt::format("{}", v);
    } else {
      out << std::string(kPoseArraySize, ',');
    }
    out << ',' << encode_switches(r.room_switches) << '\n';
  }
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_trials_csv(out, rows);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<TrialRow> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_cells(line, '\n').front() != kTrialsSchemaLine) {
    throw SchemaMismatch(fmt::format("first line must be '{}'", kTrialsSchemaLine));
  }
  if (!std::getline(in, line) || split_cells(line, ',') != trial_csv_columns()) {
    throw SchemaMismatch("header does not match the trials schema");
  }

  std::vector<TrialRow> rows;
  int line_no = 2;
  const std::size_t width = trial_csv_columns().size();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto c = split_cells(line, ',');
    if (c.size() != width) {
      throw SchemaMismatch(fmt::format("line {}: expected {} cells, got {}", line_no, width, c.size()));
    }
    TrialRow r;
    try {
      r.approach = approach_from_string(c[0]);
    } catch (const ConfigInvalid&) {
      throw SchemaMismatch(fmt::format("line {}: unknown approach '{}'", line_no, c[0]));
    }
    r.environment_level = to_double(c[1], "environment_level", line_no);
    r.trial = to_int<int>(c[2], "trial", line_no);
    r.device = to_int<int>(c[3], "device", line_no);
    r.seed = to_int<std::uint64_t>(c[4], "seed", line_no);
    const int success = to_int<int>(c[5], "success", line_no);
    if (success != 0 && success != 1) throw SchemaMismatch(fmt::format("line {}: success must be 0 or 1", line_no));
    r.success = success == 1;
    r.localization_delay = to_optional(c[6], "localization_delay_s", line_no);
    r.time_to_stable = to_optional(c[7], "time_to_stable_s", line_no);
    r.anchor_count = to_int<int>(c[8], "anchor_count", line_no);
    r.position_error = to_optional(c[9], "position_error_m", line_no);
    r.orientation_error = to_optional(c[10], "orientation_error_rad", line_no);
    if (!c[11].empty()) {
      PoseArray values{};
      for (std::size_t i = 0; i < kPoseArraySize; ++i) values[i] = to_double(c[11 + i], "ref_*", line_no);
      try {
        r.reference_pose = RigidPose::from_array(values);
      } catch (const InvalidPose& e) {
        throw SchemaMismatch(fmt::format("line {}: reference pose: {}", line_no, e.detail()));
      }
    }
    r.room_switches = decode_switches(c[23], line_no);
    if (r.success != r.localization_delay.has_value()) {
      throw SchemaMismatch(fmt::format("line {}: localization delay must be present iff success", line_no));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_trials_csv(in);
}

}  // namespace beaconsync
