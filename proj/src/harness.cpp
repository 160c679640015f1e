#include "beaconsync/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "beaconsync/error.hpp"

namespace beaconsync {

DisparityStats pairwise_disparity(std::span<const RigidPose> poses) {
  if (poses.size() < 2) {
    throw TooFewSessions(fmt::format("need at least 2 reference poses, got {}", poses.size()));
  }
  DisparityStats s;
  double pos_sum = 0.0;
  double rot_sum = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      const double dp = (poses[i].translation() - poses[j].translation()).norm();
      const double dr = rotation_angle_between(poses[i].rotation(), poses[j].rotation());
      pos_sum += dp;
      rot_sum += dr;
      s.pos_max = std::max(s.pos_max, dp);
      s.rot_max = std::max(s.rot_max, dr);
      ++s.pairs;
    }
  }
  s.pos_mean = pos_sum / static_cast<double>(s.pairs);
  s.rot_mean = rot_sum / static_cast<double>(s.pairs);
  return s;
}

namespace {

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  double max = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    max = n == 0 ? v : std::max(max, v);
    ++n;
  }
  std::optional<double> mean() const { return n ? std::optional(sum / static_cast<double>(n)) : std::nullopt; }
  std::optional<double> maximum() const { return n ? std::optional(max) : std::nullopt; }
  std::optional<double> stddev() const {
    if (!n) return std::nullopt;
    const double m = sum / static_cast<double>(n);
    return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - m * m));
  }
};

std::string opt(const std::optional<double>& v, int precision = 4) {
  return v ? fmt::format("{:.{}f}", *v, precision) : std::string("-");
}

}  // namespace

MetricsReport compute_report(std::span<const TrialRow> rows) {
  MetricsReport report;
  for (Approach a : {Approach::BleWorldMap, Approach::BleCloudAnchor, Approach::Uwb}) {
    ApproachMetrics m;
    m.approach = a;
    Accumulator pos;
    Accumulator rot;
    Accumulator lat;
    std::vector<RigidPose> refs;
    for (const auto& r : rows) {
      if (r.approach != a) continue;
      ++m.trials;
      auto& level = m.success_by_level[r.environment_level];
      ++level.trials;
      if (!r.success) continue;
      ++m.successes;
      ++level.successes;
      if (r.position_error) pos.add(*r.position_error);
      if (r.orientation_error) rot.add(*r.orientation_error);
      if (r.localization_delay) lat.add(*r.localization_delay);
      if (r.reference_pose) refs.push_back(*r.reference_pose);
    }
    if (m.trials == 0) continue;
    m.position_error_mean = pos.mean();
    m.position_error_max = pos.maximum();
    m.orientation_error_mean = rot.mean();
    m.orientation_error_max = rot.maximum();
    m.latency_mean = lat.mean();
    m.latency_stddev = lat.stddev();
    if (refs.size() >= 2) m.reference_disparity = pairwise_disparity(refs);
    report.approaches.push_back(std::move(m));
  }
  return report;
}

void print_report(std::ostream& out, const MetricsReport& report) {
  if (report.empty()) {
    out << "no data\n";
    return;
  }
  fmt::print(out, "{:<18} {:>7} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n", "approach", "trials",
             "success", "pos_mean", "pos_max", "rot_mean", "rot_max", "lat_mean", "lat_std");
  for (const auto& m : report.approaches) {
    fmt::print(out, "{:<18} {:>7} {:>8.3f} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n", to_string(m.approach),
               m.trials, static_cast<double>(m.successes) / static_cast<double>(m.trials),
               opt(m.position_error_mean), opt(m.position_error_max), opt(m.orientation_error_mean),
               opt(m.orientation_error_max), opt(m.latency_mean, 2), opt(m.latency_stddev, 2));
  }
  out << "\nsuccess rate by environment change level\n";
  for (const auto& m : report.approaches) {
    fmt::print(out, "  {:<18}", to_string(m.approach));
    for (const auto& [level, s] : m.success_by_level) fmt::print(out, " c={}:{:.3f}", level, s.rate());
    out << '\n';
  }
  for (const auto& m : report.approaches) {
    if (!m.reference_disparity) continue;
    const auto& d = *m.reference_disparity;
    fmt::print(out,
               "\nreference pose disparity ({}, {} pairs)\n  position    mean {:.4f} m   max {:.4f} m\n"
               "  orientation mean {:.4f} rad max {:.4f} rad\n",
               to_string(m.approach), d.pairs, d.pos_mean, d.pos_max, d.rot_mean, d.rot_max);
  }
}

void write_report_csv(std::ostream& out, const MetricsReport& report) {
  out << kReportSchemaLine << '\n' << "approach,metric,environment_level,value\n";
  auto put = [&](Approach a, const char* metric, const std::optional<double>& v, const std::string& level = "") {
    if (v) out << fmt::format("{},{},{},{}\n", to_string(a), metric, level, *v);
  };
  for (const auto& m : report.approaches) {
    const Approach a = m.approach;
    put(a, "trials", static_cast<double>(m.trials));
    put(a, "success_rate", static_cast<double>(m.successes) / static_cast<double>(m.trials));
    put(a, "position_error_mean_m", m.position_error_mean);
    put(a, "position_error_max_m", m.position_error_max);
    put(a, "orientation_error_mean_rad", m.orientation_error_mean);
    put(a, "orientation_error_max_rad", m.orientation_error_max);
    put(a, "latency_mean_s", m.latency_mean);
    put(a, "latency_stddev_s", m.latency_stddev);
    for (const auto& [level, s] : m.success_by_level) put(a, "success_rate", s.rate(), fmt::format("{}", level));
    if (m.reference_disparity) {
      put(a, "reference_position_disparity_mean_m", m.reference_disparity->pos_mean);
      put(a, "reference_position_disparity_max_m", m.reference_disparity->pos_max);
      put(a, "reference_orientation_disparity_mean_rad", m.reference_disparity->rot_mean);
      put(a, "reference_orientation_disparity_max_rad", m.reference_disparity->rot_max);
    }
  }
}

std::vector<TrialRecord> run_batch(const Scenario& scenario) {
  const TrialRunner runner(scenario.world, scenario.params, scenario.seed);

  struct Job {
    Approach approach;
    double level;
    int trial;
  };
  std::vector<Job> jobs;
  for (Approach a : scenario.approaches)
    for (double level : scenario.environment_levels)
      for (int t = 0; t < scenario.trials; ++t) jobs.push_back({a, level, t});

  std::vector<std::vector<TrialRecord>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& job = jobs[i];
        auto records = runner.run_sessions(job.approach, job.level,
                                           scenario.seed + static_cast<std::uint64_t>(job.trial), scenario.devices);
        for (auto& r : records) r.trial_index = job.trial;
        results[i] = std::move(records);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(scenario.jobs, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TrialRecord> out;
  for (auto& batch : results)
    for (auto& r : batch) out.push_back(std::move(r));
  return out;
}

int cli_run(const std::filesystem::path& config_path, const std::filesystem::path& output_csv,
            const RunOverrides& overrides, std::ostream& log) {
  Scenario scenario;
  try {
    scenario = load_scenario(config_path);
  } catch (const ConfigInvalid& e) {
    log << "error: ConfigInvalid: " << e.detail() << '\n';
    return kExitConfigInvalid;
  } catch (const IoError& e) {
    log << "error: IoError: " << e.detail() << '\n';
    return kExitIoError;
  }
  if (overrides.seed) scenario.seed = *overrides.seed;
  if (overrides.trials) {
    if (*overrides.trials < 1) {
      log << "error: ConfigInvalid: key 'trials': must be >= 1\n";
      return kExitConfigInvalid;
    }
    scenario.trials = *overrides.trials;
  }
  if (overrides.jobs) scenario.jobs = std::max(1, *overrides.jobs);

  std::vector<TrialRow> rows;
  try {
    for (const auto& r : run_batch(scenario)) rows.push_back(to_row(r));
  } catch (const ConfigInvalid& e) {
    log << "error: ConfigInvalid: " << e.detail() << '\n';
    return kExitConfigInvalid;
  }
  try {
    write_trials_csv(output_csv, rows);
  } catch (const IoError& e) {
    log << "error: IoError: " << e.detail() << '\n';
    return kExitIoError;
  }
  return kExitOk;
}

int cli_report(const std::filesystem::path& trials_csv, const std::optional<std::filesystem::path>& report_csv,
               std::ostream& out, std::ostream& log) {
  std::vector<TrialRow> rows;
  try {
    rows = read_trials_csv(trials_csv);
  } catch (const SchemaMismatch& e) {
    log << "error: SchemaMismatch: " << e.detail() << '\n';
    return kExitConfigInvalid;
  } catch (const IoError& e) {
    log << "error: IoError: " << e.detail() << '\n';
    return kExitIoError;
  }
  const MetricsReport report = compute_report(rows);
  print_report(out, report);
  if (report_csv) {
    std::ofstream file(*report_csv, std::ios::binary | std::ios::trunc);
    if (!file) {
      log << "error: IoError: cannot write " << report_csv->string() << '\n';
      return kExitIoError;
    }
    write_report_csv(file, report);
  }
  return kExitOk;
}

}  // namespace beaconsync
