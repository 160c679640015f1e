// Command-line front end: run trial batches, report on them, or serve the
// anchor store over HTTP.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "beaconsync/anchor_store.hpp"
#include "beaconsync/error.hpp"
#include "beaconsync/harness.hpp"
#include "beaconsync/store_protocol.hpp"

namespace {

beaconsync::StoreServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const std::string& host, int port, const std::optional<std::string>& snapshot) {
  beaconsync::AnchorStore store;
  if (snapshot && std::filesystem::exists(*snapshot)) store.load(*snapshot);

  beaconsync::StoreServer server(store);
  const int bound = server.bind(host, port);
  std::cout << "anchor store listening on " << host << ":" << bound << beaconsync::kStoreRpcPath << std::endl;

  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;

  if (snapshot) store.save(*snapshot);
  return beaconsync::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beacon-assisted multi-device AR anchor synchronization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> jobs;
  auto* run = app.add_subcommand("run", "Run the trial batch described by a scenario config");
  run->add_option("--config", config_path, "Scenario config file")->required();
  run->add_option("--out", out_path, "Trials CSV to write")->required();
  run->add_option("--seed", seed, "Override the config's base seed");
  run->add_option("--trials", trials, "Override the config's trial count");
  run->add_option("--jobs", jobs, "Worker threads");

  std::string in_path;
  std::optional<std::string> report_out;
  auto* report = app.add_subcommand("report", "Aggregate a trials CSV into accuracy, robustness and latency metrics");
  report->add_option("--in", in_path, "Trials CSV")->required();
  report->add_option("--out", report_out, "Report CSV to write");

  std::string host = "127.0.0.1";
  int port = 8765;
  std::optional<std::string> snapshot;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the anchor store JSON protocol over HTTP");
  serve_cmd->add_option("--host", host, "Address to bind");
  serve_cmd->add_option("--port", port, "Port to bind (0 picks one)");
  serve_cmd->add_option("--snapshot", snapshot, "Snapshot file loaded at start and written at shutdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? beaconsync::kExitOk : beaconsync::kExitUsage;
  }

  try {
    if (*run) {
      return beaconsync::cli_run(config_path, out_path, {seed, trials, jobs}, std::cerr);
    }
    if (*report) {
      std::optional<std::filesystem::path> out;
      if (report_out) out = *report_out;
      return beaconsync::cli_report(in_path, out, std::cout, std::cerr);
    }
    return serve(host, port, snapshot);
  } catch (const beaconsync::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return beaconsync::kExitIoError;
  } catch (const beaconsync::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return beaconsync::kExitConfigInvalid;
  }
}
