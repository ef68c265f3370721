// softhand: run experiments, serve live sessions, replay telemetry.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <exception>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "softhand/experiments.hpp"
#include "softhand/session.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace softhand::harness;
  CLI::App app{"Soft tendon-driven hand simulator"};
  app.require_subcommand(1);

  std::string experiment;
  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
  run->add_option("experiment", experiment, "A1, workspace, B1, C, D1, D2 or D3")->required();
  run->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");

  int port = 0;
  double tick_hz = 50.0;
  auto* serve = app.add_subcommand("serve", "Run a live session");
  serve->add_option("--port", port, "TCP port on 127.0.0.1 (0 picks one)")->required();
  serve->add_option("--scenario", scenario_path, "Scenario file (JSON)")->required();
  serve->add_option("--rate", tick_hz, "Tick rate in Hz");

  std::string telemetry;
  auto* rep = app.add_subcommand("replay", "Re-simulate a run and compare its telemetry");
  rep->add_option("telemetry", telemetry, "Telemetry CSV beside its manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      Scenario s = load_scenario(scenario_path);
      if (seed_opt->count() > 0) s.seed = seed;
      const auto out = run_experiment(experiment, s, out_dir);
      for (const auto& a : out.artifacts) std::cout << (std::filesystem::path(out_dir) / a).string() << '\n';
      std::cout << out.manifest.string() << '\n';
      return 0;
    }
    if (serve->parsed()) {
      SessionServer server(load_scenario(scenario_path), {port, tick_hz});
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << fmt::format("listening on 127.0.0.1:{}", server.port()) << std::endl;
      server.run(g_stop);
      return 0;
    }
    const auto report = replay(telemetry);
    if (report.identical) {
      std::cout << fmt::format("{}: identical", report.file) << '\n';
      return 0;
    }
    std::cout << fmt::format("{}: diverges at line {}", report.file, report.line);
    if (report.tick >= 0) std::cout << fmt::format(" (tick {})", report.tick);
    std::cout << ": " << report.message << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
