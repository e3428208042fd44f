#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "coilpilot/config.hpp"
#include "coilpilot/error.hpp"
#include "coilpilot/replay.hpp"
#include "coilpilot/scenarios.hpp"
#include "coilpilot/server.hpp"

namespace {

coilpilot::SessionServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string joined_scenarios() {
  std::string out;
  for (const auto& n : coilpilot::scenario_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coilpilot: stacked-balloon robot simulator and anchor implantation harness"};
  app.require_subcommand(1);

  std::string scenario, config_path, out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_given = false;
  auto* run = app.add_subcommand("run", "Run a scenario headless and write telemetry + summary");
  run->add_option("scenario", scenario, "One of: " + joined_scenarios())->required();
  run->add_option("--config", config_path, "JSON config patch over the defaults");
  run->add_option("--seed", seed, "Random seed")->each([&](const std::string&) { seed_given = true; });
  run->add_option("--out", out_dir, "Output directory");

  int port = 8765;
  double duration = 0.0;
  std::string serve_out, host = "127.0.0.1";
  double time_scale = -1.0;
  auto* serve = app.add_subcommand("serve", "Serve a live session to one cockpit client");
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--config", config_path, "JSON config patch over the defaults");
  serve->add_option("--seed", seed, "Random seed")->each([&](const std::string&) { seed_given = true; });
  serve->add_option("--duration", duration, "Simulated seconds to run, 0 = until interrupted");
  serve->add_option("--out", serve_out, "Write telemetry, command log and summary here");
  serve->add_option("--time-scale", time_scale, "Simulated seconds per wall second, 0 = free-running");

  std::string csv;
  auto* rep = app.add_subcommand("replay", "Recompute the summary of a telemetry CSV");
  rep->add_option("csv", csv, "Telemetry file")->required()->check(CLI::ExistingFile);

  bool print_defaults = false;
  auto* cfg_cmd = app.add_subcommand("config", "Print the effective configuration");
  cfg_cmd->add_option("--config", config_path, "JSON config patch over the defaults");
  cfg_cmd->add_flag("--defaults", print_defaults, "Ignore --config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rep) {
      std::cout << coilpilot::replay::dump_summary(coilpilot::replay::replay_file(csv));
      return 0;
    }
    coilpilot::Config cfg = coilpilot::load_config(print_defaults ? "" : config_path);
    if (seed_given) {
      cfg.seed = seed;
      cfg.environment.sensor.seed = seed;
    }
    if (*cfg_cmd) {
      std::cout << coilpilot::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (*serve) {
      if (time_scale >= 0.0) cfg.session.time_scale = time_scale;
      coilpilot::SessionServer server(cfg, {host, port, duration, serve_out});
      const int bound = server.start();
      std::cout << "listening on " << host << ":" << bound << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.run();
      g_server = nullptr;
      return 0;
    }
    const auto result = coilpilot::run_scenario(scenario, cfg, out_dir);
    std::cout << coilpilot::replay::dump_summary(result.summary);
    return 0;
  } catch (const std::exception& e) {
    const auto record = coilpilot::error_record(scenario, e);
    if (*run) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (!ec) std::ofstream(std::filesystem::path(out_dir) / "error.json") << record.dump(2) << '\n';
    }
    std::cerr << record.dump() << '\n';
    return 2;
  }
}
