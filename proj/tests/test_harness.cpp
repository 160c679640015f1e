#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <doctest.h>

#include "beaconsync/error.hpp"
#include "beaconsync/harness.hpp"
#include "beaconsync/scenario.hpp"
#include "beaconsync/trial_csv.hpp"
#include "test_support.hpp"

using namespace beaconsync;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("beaconsync_harness_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TrialRow row(Approach a, double level, bool success, double pos = 0.0, double rot = 0.0, double delay = 0.0) {
  TrialRow r;
  r.approach = a;
  r.environment_level = level;
  r.success = success;
  if (success) {
    r.position_error = pos;
    r.orientation_error = rot;
    r.localization_delay = delay;
    r.anchor_count = 1;
  }
  return r;
}

const ApproachMetrics* find(const MetricsReport& r, Approach a) {
  for (const auto& m : r.approaches)
    if (m.approach == a) return &m;
  return nullptr;
}

}  // namespace

TEST_SUITE("eval_harness") {
  TEST_CASE("pairwise_disparity examples") {
    const RigidPose p;
    const auto same = pairwise_disparity(std::vector<RigidPose>{p, p});
    CHECK(same.pos_mean == 0.0);
    CHECK(same.pos_max == 0.0);
    CHECK(same.rot_mean == doctest::Approx(0.0));
    CHECK(same.rot_max == doctest::Approx(0.0));
    CHECK(same.pairs == 1);

    const std::vector<RigidPose> line = {RigidPose::from_translation({0, 0, 0}), RigidPose::from_translation({1, 0, 0}),
                                         RigidPose::from_translation({2, 0, 0})};
    const auto d = pairwise_disparity(line);
    CHECK(d.pos_mean == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(d.pos_max == 2.0);
    CHECK(d.pairs == 3);

    CHECK_THROWS_AS(pairwise_disparity(std::vector<RigidPose>{p}), TooFewSessions);
    CHECK_THROWS_AS(pairwise_disparity(std::vector<RigidPose>{}), TooFewSessions);
  }

  TEST_CASE("pairwise_disparity is permutation- and left-invariant") {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<RigidPose> poses;
      for (int i = 0; i < 12; ++i) poses.push_back(testing::random_pose(gen, 2.0));
      const auto base = pairwise_disparity(poses);

      std::vector<RigidPose> shuffled = poses;
      std::shuffle(shuffled.begin(), shuffled.end(), gen);
      const auto s = pairwise_disparity(shuffled);
      CHECK(s.pos_mean == doctest::Approx(base.pos_mean).epsilon(1e-12));
      CHECK(s.pos_max == base.pos_max);
      CHECK(s.rot_mean == doctest::Approx(base.rot_mean).epsilon(1e-12));
      CHECK(s.rot_max == base.rot_max);

      const RigidPose m = testing::random_pose(gen);
      std::vector<RigidPose> moved;
      for (const auto& q : poses) moved.push_back(compose(m, q));
      const auto t = pairwise_disparity(moved);
      CHECK(std::abs(t.pos_mean - base.pos_mean) <= 1e-9);
      CHECK(std::abs(t.pos_max - base.pos_max) <= 1e-9);
      CHECK(std::abs(t.rot_mean - base.rot_mean) <= 1e-9);
      CHECK(std::abs(t.rot_max - base.rot_max) <= 1e-9);
    }
  }

  TEST_CASE("report on a hand-built 5-row CSV") {
    const std::string csv = std::string(kTrialsSchemaLine) + "\n" +
                            "approach,environment_level,trial,device,seed,success,localization_delay_s,"
                            "time_to_stable_s,anchor_count,position_error_m,orientation_error_rad,"
                            "ref_r00,ref_r01,ref_r02,ref_r10,ref_r11,ref_r12,ref_r20,ref_r21,ref_r22,"
                            "ref_tx,ref_ty,ref_tz,room_switches\n"
                            "BLE_WORLDMAP,0,0,0,1,1,5,,1,0.01,0.02,,,,,,,,,,,,,0@->lab-a\n"
                            "BLE_WORLDMAP,0,1,0,2,1,7,,1,0.03,0.04,,,,,,,,,,,,,0@->lab-a\n"
                            "BLE_WORLDMAP,0.5,0,0,1,0,,,0,,,,,,,,,,,,,,,0@->lab-a\n"
                            "UWB,0,0,0,1,1,24,24,1,0.05,0.1,1,0,0,0,1,0,0,0,1,3,0.8,2.5,\n"
                            "UWB,0,1,0,2,1,26,26,1,0.07,0.2,1,0,0,0,1,0,0,0,1,3.3,0.8,2.9,\n";
    std::istringstream in(csv);
    const auto rows = read_trials_csv(in);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].room_switches.size() == 1);
    CHECK(rows[0].room_switches[0].from_room.empty());
    const MetricsReport report = compute_report(rows);

    const auto* ble = find(report, Approach::BleWorldMap);
    REQUIRE(ble);
    CHECK(ble->trials == 3);
    CHECK(ble->successes == 2);
    CHECK(*ble->position_error_mean == doctest::Approx(0.02));
    CHECK(*ble->position_error_max == doctest::Approx(0.03));
    CHECK(*ble->orientation_error_mean == doctest::Approx(0.03));
    CHECK(*ble->latency_mean == doctest::Approx(6.0));
    CHECK(*ble->latency_stddev == doctest::Approx(1.0));
    CHECK(ble->success_by_level.at(0.0).rate() == 1.0);
    CHECK(ble->success_by_level.at(0.5).rate() == 0.0);
    CHECK_FALSE(ble->reference_disparity);

    const auto* uwb = find(report, Approach::Uwb);
    REQUIRE(uwb);
    CHECK(*uwb->position_error_mean == doctest::Approx(0.06));
    CHECK(*uwb->orientation_error_max == doctest::Approx(0.2));
    CHECK(*uwb->latency_mean == doctest::Approx(25.0));
    REQUIRE(uwb->reference_disparity);
    CHECK(uwb->reference_disparity->pos_mean == doctest::Approx(0.5));
    CHECK(uwb->reference_disparity->rot_mean == doctest::Approx(0.0));
    CHECK_FALSE(find(report, Approach::BleCloudAnchor));

    std::ostringstream table;
    print_report(table, report);
    CHECK(table.str().find("BLE_WORLDMAP") != std::string::npos);
    std::ostringstream out;
    write_report_csv(out, report);
    CHECK(out.str().rfind(kReportSchemaLine, 0) == 0);
    CHECK(out.str().find("UWB,reference_position_disparity_mean_m,,0.49999") != std::string::npos);
    CHECK(out.str().find("BLE_WORLDMAP,success_rate,0.5,0") != std::string::npos);
  }

  TEST_CASE("constant rows: mean equals max") {
    std::vector<TrialRow> rows;
    for (int i = 0; i < 7; ++i) rows.push_back(row(Approach::BleCloudAnchor, 0.0, true, 0.125, 0.25, 3.0));
    const auto m = compute_report(rows).approaches.at(0);
    CHECK(*m.position_error_mean == *m.position_error_max);
    CHECK(*m.position_error_mean == 0.125);
    CHECK(*m.orientation_error_mean == 0.25);
    CHECK(*m.latency_stddev == 0.0);
  }

  TEST_CASE("report matches a brute-force recomputation") {
    std::mt19937_64 gen(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double levels[] = {0.0, 0.25, 0.5};
    std::vector<TrialRow> rows;
    for (int i = 0; i < 1000; ++i) {
      const auto a = static_cast<Approach>(i % 3);
      rows.push_back(row(a, levels[i % 3 == 0 ? 0 : (i / 3) % 3], u(gen) < 0.7, u(gen), u(gen), 10 * u(gen)));
    }
    const MetricsReport report = compute_report(rows);
    for (const auto& m : report.approaches) {
      double pos = 0.0;
      double pos_max = 0.0;
      double lat = 0.0;
      double lat_sq = 0.0;
      int n = 0;
      int total = 0;
      for (const auto& r : rows) {
        if (r.approach != m.approach) continue;
        ++total;
        if (!r.success) continue;
        ++n;
        pos += *r.position_error;
        pos_max = std::max(pos_max, *r.position_error);
        lat += *r.localization_delay;
        lat_sq += *r.localization_delay * *r.localization_delay;
      }
      CHECK(m.trials == static_cast<std::size_t>(total));
      CHECK(m.successes == static_cast<std::size_t>(n));
      CHECK(*m.position_error_mean == doctest::Approx(pos / n).epsilon(1e-12));
      CHECK(*m.position_error_max == pos_max);
      CHECK(*m.latency_stddev == doctest::Approx(std::sqrt(lat_sq / n - (lat / n) * (lat / n))).epsilon(1e-9));
      CHECK(*m.position_error_max >= *m.position_error_mean);
      for (const auto& [level, s] : m.success_by_level) {
        CHECK(s.rate() >= 0.0);
        CHECK(s.rate() <= 1.0);
      }
    }
  }

  TEST_CASE("CSV round trip preserves rows") {
    const TrialRunner runner(WorldModel::desk_scale(), SimParams{});
    std::vector<TrialRow> rows;
    for (Approach a : {Approach::BleWorldMap, Approach::BleCloudAnchor, Approach::Uwb})
      for (const auto& r : runner.run_sessions(a, 0.25, 9, 2)) rows.push_back(to_row(r));
    std::stringstream buf;
    write_trials_csv(buf, rows);
    const auto back = read_trials_csv(buf);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].approach == rows[i].approach);
      CHECK(back[i].success == rows[i].success);
      CHECK(back[i].localization_delay == rows[i].localization_delay);
      CHECK(back[i].position_error == rows[i].position_error);
      CHECK(back[i].orientation_error == rows[i].orientation_error);
      CHECK(back[i].reference_pose.has_value() == rows[i].reference_pose.has_value());
      if (rows[i].reference_pose) CHECK(back[i].reference_pose->to_array() == rows[i].reference_pose->to_array());
      CHECK(back[i].room_switches.size() == rows[i].room_switches.size());
    }
  }

  TEST_CASE("CSV schema errors") {
    std::istringstream no_schema("approach\n");
    CHECK_THROWS_AS(read_trials_csv(no_schema), SchemaMismatch);
    std::istringstream wrong_header(std::string(kTrialsSchemaLine) + "\na,b,c\n");
    CHECK_THROWS_AS(read_trials_csv(wrong_header), SchemaMismatch);

    std::stringstream good;
    write_trials_csv(good, {row(Approach::Uwb, 0.0, false)});
    std::string text = good.str();
    std::istringstream short_row(text + "UWB,0,0\n");
    CHECK_THROWS_AS(read_trials_csv(short_row), SchemaMismatch);
    std::string bad_delay = text;
    bad_delay.replace(bad_delay.rfind("UWB,0,0,0,0,0,"), 14, "UWB,0,0,0,0,0,3");
    std::istringstream delay_without_success(bad_delay);
    CHECK_THROWS_AS(read_trials_csv(delay_without_success), SchemaMismatch);
  }

  TEST_CASE("scenario parsing") {
    const Scenario s = parse_scenario(
        "# comment\n"
        "approaches = uwb, ble_worldmap\n"
        "trials = 4   # trailing comment\n"
        "seed = 99\n"
        "environment_levels = 0, 0.5, 1\n"
        "noise.heading_sigma = 0.01\n"
        "hysteresis.confirm_scans = 2\n");
    CHECK(s.approaches == std::vector<Approach>{Approach::Uwb, Approach::BleWorldMap});
    CHECK(s.trials == 4);
    CHECK(s.seed == 99);
    CHECK(s.environment_levels == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(s.params.noise.heading_sigma == 0.01);
    CHECK(s.params.hysteresis.confirm_scans == 2);
    CHECK(s.world.rooms.size() == 2);

    const Scenario custom = parse_scenario(
        "room = hall 0 0 10 4\n"
        "beacon = u1 uwb hall 5 1 2\n"
        "beacon = b1 ble hall 1 1 2\n"
        "anchor = x hall 4 1 2 0.5\n");
    CHECK(custom.world.rooms.size() == 1);
    CHECK(custom.world.beacons.size() == 2);
    CHECK(custom.world.anchors.at(0).true_pose.translation() == Vec3(4, 1, 2));
  }

  TEST_CASE("scenario errors name the key") {
    auto message = [](const std::string& text) {
      try {
        parse_scenario(text);
      } catch (const ConfigInvalid& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    CHECK(message("trials = many\n").find("'trials'") != std::string::npos);
    CHECK(message("trials = 0\n").find("'trials'") != std::string::npos);
    CHECK(message("seed = 1\nbogus = 2\n").find("'bogus' (line 2)") != std::string::npos);
    CHECK(message("seed = 1\nseed = 2\n").find("'seed'") != std::string::npos);
    CHECK(message("approaches = carrier_pigeon\n").find("'approaches'") != std::string::npos);
    CHECK(message("environment_levels = 0, 2\n").find("'environment_levels'") != std::string::npos);
    CHECK(message("noise.heading_sigma = -1\n").find("noise.heading_sigma") != std::string::npos);
    CHECK(message("beacon = b1 ble nowhere 0 0 0\n").find("nowhere") != std::string::npos);
    CHECK(message("just words\n").find("line 1") != std::string::npos);
  }

  TEST_CASE("cli_run: one trial gives header plus one row") {
    TempDir dir;
    write_file(dir / "one.cfg", "approaches = uwb\ntrials = 1\nseed = 5\n");
    std::ostringstream log;
    REQUIRE(cli_run(dir / "one.cfg", dir / "out.csv", {}, log) == kExitOk);
    std::istringstream lines(read_file(dir / "out.csv"));
    std::vector<std::string> all;
    for (std::string l; std::getline(lines, l);) all.push_back(l);
    REQUIRE(all.size() == 3);
    CHECK(all[0] == kTrialsSchemaLine);
    CHECK(all[2].rfind("UWB,0,0,0,5,1,", 0) == 0);
  }

  TEST_CASE("cli_run is deterministic and independent of the worker count") {
    TempDir dir;
    write_file(dir / "batch.cfg",
               "approaches = uwb, ble_worldmap, ble_cloud_anchor\ntrials = 6\nseed = 11\ndevices = 2\n"
               "environment_levels = 0, 0.3\n");
    std::ostringstream log;
    REQUIRE(cli_run(dir / "batch.cfg", dir / "a.csv", {}, log) == kExitOk);
    REQUIRE(cli_run(dir / "batch.cfg", dir / "b.csv", {}, log) == kExitOk);
    REQUIRE(cli_run(dir / "batch.cfg", dir / "c.csv", {std::nullopt, std::nullopt, 4}, log) == kExitOk);
    CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
    CHECK(read_file(dir / "a.csv") == read_file(dir / "c.csv"));
    REQUIRE(cli_run(dir / "batch.cfg", dir / "d.csv", {12, 2, std::nullopt}, log) == kExitOk);
    CHECK(read_file(dir / "a.csv") != read_file(dir / "d.csv"));
  }

  TEST_CASE("cli exit codes") {
    TempDir dir;
    std::ostringstream log;
    write_file(dir / "bad.cfg", "trials = 2\nstabilizer.timeout = soon\n");
    CHECK(cli_run(dir / "bad.cfg", dir / "out.csv", {}, log) == kExitConfigInvalid);
    CHECK(log.str().find("stabilizer.timeout") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir / "out.csv"));

    CHECK(cli_run(dir / "missing.cfg", dir / "out.csv", {}, log) == kExitIoError);
    write_file(dir / "ok.cfg", "trials = 1\n");
    CHECK(cli_run(dir / "ok.cfg", dir / "no_such_dir" / "out.csv", {}, log) == kExitIoError);
    CHECK(cli_run(dir / "ok.cfg", dir / "out.csv", {std::nullopt, 0, std::nullopt}, log) == kExitConfigInvalid);

    std::ostringstream out;
    CHECK(cli_report(dir / "missing.csv", std::nullopt, out, log) == kExitIoError);
    write_file(dir / "junk.csv", "hello\n");
    CHECK(cli_report(dir / "junk.csv", std::nullopt, out, log) == kExitConfigInvalid);
    CHECK(log.str().find("SchemaMismatch") != std::string::npos);
  }

  TEST_CASE("cli_report on a header-only CSV prints no data") {
    TempDir dir;
    std::stringstream empty;
    write_trials_csv(empty, {});
    write_file(dir / "empty.csv", empty.str());
    std::ostringstream out;
    std::ostringstream log;
    CHECK(cli_report(dir / "empty.csv", dir / "report.csv", out, log) == kExitOk);
    CHECK(out.str() == "no data\n");
    CHECK(read_file(dir / "report.csv").rfind(kReportSchemaLine, 0) == 0);
  }

  TEST_CASE("cli_report writes the report CSV") {
    TempDir dir;
    write_file(dir / "run.cfg", "approaches = uwb, ble_cloud_anchor\ntrials = 5\ndevices = 3\n");
    std::ostringstream out;
    std::ostringstream log;
    REQUIRE(cli_run(dir / "run.cfg", dir / "trials.csv", {}, log) == kExitOk);
    REQUIRE(cli_report(dir / "trials.csv", dir / "report.csv", out, log) == kExitOk);
    const std::string report = read_file(dir / "report.csv");
    CHECK(report.find("UWB,reference_orientation_disparity_mean_rad,,") != std::string::npos);
    CHECK(report.find("BLE_CLOUD_ANCHOR,success_rate,0,1") != std::string::npos);
    CHECK(out.str().find("reference pose disparity (UWB, 105 pairs)") != std::string::npos);
  }
}
