#pragma once

// Experiment runners. Each writes CSV artifacts, manifest.json and
// summary.json into an output directory; the typed runners return the data
// for programmatic checks.

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "softhand/scenario.hpp"
#include "softhand/simulation.hpp"

namespace softhand::harness {

inline constexpr std::string_view kHarnessVersion = "1";

const std::vector<std::string>& experiment_names();

// Steps a full run; `observer` sees the simulation after every tick.
std::vector<TickRecord> simulate(const Scenario& scenario,
                                 const std::function<void(const Simulation&)>& observer = {});

struct WorkspaceCloud {
  finger::FingerType type = finger::FingerType::D;
  std::vector<Point2> points;
  double hull_area = 0.0;
};

struct WorkspaceResult {
  std::vector<WorkspaceCloud> clouds;
  // Largest distance from an A-type sample to the MCP, PIP, DIP arc curve.
  double a_curve_distance = 0.0;
  double seconds = 0.0;
};

WorkspaceResult run_workspace(const Scenario& scenario);

// Distance from `p` to the fingertip curve swept by flexing MCP, then PIP,
// then DIP to their limits.
double distance_to_flexion_curve(const finger::FingerConfig& config, Point2 p);

struct A1Run {
  finger::FingerType type = finger::FingerType::D;
  std::string profile;
  bool moved = false;  // false marks the combination inapplicable
  std::vector<TickRecord> records;
};

std::vector<A1Run> run_a1(const Scenario& scenario);

struct ContactCount {
  std::string object;
  int fingertip_contacts = 0;
  int touching_fingers = 0;
};

std::vector<ContactCount> run_contact_counts(const Scenario& scenario);

struct RunOutput {
  std::vector<std::filesystem::path> artifacts;
  std::filesystem::path manifest;
};

// Throws std::invalid_argument for an unknown experiment or a scenario that
// does not fit it.
RunOutput run_experiment(const std::string& name, const Scenario& scenario, const std::filesystem::path& out_dir);

struct ReplayReport {
  bool identical = false;
  std::string file;
  int line = 0;  // first differing line, 1-based; 0 when identical
  int tick = -1;
  std::string message;
};

// Re-runs the experiment recorded in the manifest beside `telemetry` and
// compares the file byte for byte. Throws std::runtime_error when the
// manifest is missing, unreadable or from another harness version.
ReplayReport replay(const std::filesystem::path& telemetry);

}  // namespace softhand::harness
