#include "softhand/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <unistd.h>

#include "json.hpp"

namespace softhand::harness {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> kNames{"A1", "workspace", "B1", "C", "D1", "D2", "D3"};
  return kNames;
}

std::vector<TickRecord> simulate(const Scenario& scenario, const std::function<void(const Simulation&)>& observer) {
  Simulation sim(scenario);
  std::vector<TickRecord> records;
  while (!sim.finished()) {
    sim.step();
    records.push_back(sim.record());
    if (observer) observer(sim);
  }
  return records;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<TickRecord> write_run(const Scenario& scenario, const fs::path& path,
                                  const std::function<void(const Simulation&)>& observer = {}) {
  auto out = open_out(path);
  out << telemetry_header() << '\n';
  return simulate(scenario, [&](const Simulation& sim) {
    out << telemetry_row(sim.record()) << '\n';
    if (observer) observer(sim);
  });
}

Scenario with_finger_type(Scenario s, finger::FingerType type) {
  for (auto& f : s.hand.fingers) f.type = type;
  return s;
}

std::string letter(finger::FingerType t) { return std::string(finger::to_string(t)); }

json record_summary(const TickRecord& r) {
  json fingers = json::array();
  for (const auto& s : r.sensing) {
    fingers.push_back({{"touching", s.touching},
                       {"contact", s.is_contact},
                       {"deformation", s.deformation},
                       {"force", s.force}});
  }
  return {{"t", r.time}, {"mode", r.mode}, {"fingertip_contacts", r.fingertip_contacts}, {"fingers", fingers}};
}

}  // namespace

double distance_to_flexion_curve(const finger::FingerConfig& config, Point2 p) {
  double best = std::numeric_limits<double>::infinity();
  finger::JointState js;
  for (finger::Joint jn : config.flexion_priority) {
    const auto j = static_cast<std::size_t>(jn);
    js.theta[j] = 0.0;
    const auto pos = finger::joint_positions(config, js);
    const Point2 c = pos[j];
    const Point2 start = pos[3] - c;
    const double radius = norm(start);
    const double a0 = std::atan2(start.y, start.x);
    const Point2 q = p - c;
    double delta = std::atan2(q.y, q.x) - a0;
    delta = std::remainder(delta, 2.0 * std::numbers::pi);
    if (delta >= 0.0 && delta <= config.joint_max[j]) {
      best = std::min(best, std::abs(norm(q) - radius));
    } else {
      const double a1 = a0 + config.joint_max[j];
      best = std::min(best, distance(p, c + radius * Point2{std::cos(a0), std::sin(a0)}));
      best = std::min(best, distance(p, c + radius * Point2{std::cos(a1), std::sin(a1)}));
    }
    js.theta[j] = config.joint_max[j];
  }
  return best;
}

WorkspaceResult run_workspace(const Scenario& scenario) {
  WorkspaceResult result;
  const auto t0 = std::chrono::steady_clock::now();
  for (auto type : scenario.finger_types) {
    finger::FingerConfig fc = scenario.hand.fingers[1];
    fc.type = type;
    WorkspaceCloud cloud;
    cloud.type = type;
    cloud.points = finger::workspace_sample(fc, static_cast<std::size_t>(scenario.workspace_samples), scenario.seed);
    cloud.hull_area = polygon_area(convex_hull(cloud.points));
    if (type == finger::FingerType::A) {
      for (Point2 q : cloud.points) result.a_curve_distance = std::max(result.a_curve_distance, distance_to_flexion_curve(fc, q));
    }
    result.clouds.push_back(std::move(cloud));
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

Scenario a1_scenario(const Scenario& base, finger::FingerType type, const MotorProfile& profile) {
  Scenario s = with_finger_type(base, type);
  s.control.mode = ControlMode::profile;
  s.control.profile = profile;
  s.objects = {};
  return s;
}

bool any_motion(const std::vector<TickRecord>& records) {
  for (const auto& r : records) {
    for (const auto& j : r.joints) {
      for (double t : j.theta) {
        if (t > 1e-9) return true;
      }
    }
  }
  return false;
}

void require_profiles(const Scenario& s, const std::string& name) {
  if (s.profiles.empty()) throw std::invalid_argument(name + " scenario needs motor profiles");
}

}  // namespace

std::vector<A1Run> run_a1(const Scenario& scenario) {
  require_profiles(scenario, "A1");
  std::vector<A1Run> runs;
  for (auto type : scenario.finger_types) {
    for (const auto& p : scenario.profiles) {
      A1Run run{type, p.name, false, simulate(a1_scenario(scenario, type, p))};
      run.moved = any_motion(run.records);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

namespace {

Scenario contact_scenario(const Scenario& base, const NamedObject& object) {
  Scenario s = base;
  s.objects = object.shape;
  s.control.mode = ControlMode::teleop;
  return s;
}

ContactCount count_contacts(const std::string& name, const TickRecord& last, const Simulation* sim) {
  ContactCount c{name, last.fingertip_contacts, 0};
  if (sim) {
    for (const auto& f : sim->hand().contacts.fingers) c.touching_fingers += f.touching() ? 1 : 0;
  }
  return c;
}

}  // namespace

std::vector<ContactCount> run_contact_counts(const Scenario& scenario) {
  if (scenario.object_set.empty()) throw std::invalid_argument("C scenario needs an object set");
  std::vector<ContactCount> counts;
  for (const auto& object : scenario.object_set) {
    Simulation sim(contact_scenario(scenario, object));
    while (!sim.finished()) sim.step();
    counts.push_back(count_contacts(object.name, sim.record(), &sim));
  }
  return counts;
}

RunOutput run_experiment(const std::string& name, const Scenario& scenario, const fs::path& out_dir) {
  if (std::find(experiment_names().begin(), experiment_names().end(), name) == experiment_names().end()) {
    throw std::invalid_argument("unknown experiment '" + name + "'");
  }
  scenario.validate();
  fs::create_directories(out_dir);
  RunOutput out;
  json summary{{"experiment", name}};
  bool approximate = false;
  const auto add = [&](const fs::path& file) { out.artifacts.push_back(file.lexically_relative(out_dir)); };

  if (name == "A1") {
    require_profiles(scenario, "A1");
    json runs = json::array();
    for (auto type : scenario.finger_types) {
      for (const auto& p : scenario.profiles) {
        const fs::path file = out_dir / fmt::format("a1_{}_{}.csv", letter(type), p.name);
        const auto records = write_run(a1_scenario(scenario, type, p), file);
        add(file);
        double peak[3] = {0.0, 0.0, 0.0};
        for (const auto& r : records) {
          for (int j = 0; j < 3; ++j) peak[j] = std::max(peak[j], r.joints[1].theta[j]);
        }
        runs.push_back({{"type", letter(type)},
                        {"profile", p.name},
                        {"inapplicable", !any_motion(records)},
                        {"peak_mcp", peak[0]},
                        {"peak_pip", peak[1]},
                        {"peak_dip", peak[2]}});
      }
    }
    summary["runs"] = runs;
  } else if (name == "workspace") {
    const auto result = run_workspace(scenario);
    json clouds = json::array();
    double a_area = 0.0;
    for (const auto& c : result.clouds) {
      if (c.type == finger::FingerType::A) a_area = c.hull_area;
    }
    for (const auto& c : result.clouds) {
      const fs::path file = out_dir / fmt::format("workspace_{}.csv", letter(c.type));
      auto f = open_out(file);
      f << "x,y\n";
      for (Point2 p : c.points) f << fmt::format("{:.9f},{:.9f}\n", p.x, p.y);
      add(file);
      json entry{{"type", letter(c.type)}, {"hull_area", c.hull_area}, {"samples", c.points.size()}};
      if (a_area > 0.0) entry["ratio_to_A"] = c.hull_area / a_area;
      clouds.push_back(entry);
    }
    summary["clouds"] = clouds;
    summary["a_curve_distance"] = result.a_curve_distance;
    summary["seconds"] = result.seconds;
  } else if (name == "B1") {
    require_profiles(scenario, "B1");
    approximate = true;
    json runs = json::array();
    for (const auto& p : scenario.profiles) {
      Scenario s = scenario;
      s.control.mode = ControlMode::profile;
      s.control.profile = p;
      const fs::path file = out_dir / fmt::format("b1_{}.csv", p.name);
      const auto records = write_run(s, file);
      add(file);
      runs.push_back({{"profile", p.name}, {"final", record_summary(records.back())}});
    }
    summary["runs"] = runs;
  } else if (name == "C") {
    if (scenario.object_set.empty()) throw std::invalid_argument("C scenario needs an object set");
    const fs::path counts_file = out_dir / "c_counts.csv";
    std::vector<ContactCount> counts;
    for (const auto& object : scenario.object_set) {
      const fs::path file = out_dir / fmt::format("c_{}.csv", object.name);
      const Scenario s = contact_scenario(scenario, object);
      int touching = 0;
      const auto records = write_run(s, file, [&](const Simulation& sim) {
        if (!sim.finished()) return;
        for (const auto& f : sim.hand().contacts.fingers) touching += f.touching() ? 1 : 0;
      });
      add(file);
      counts.push_back({object.name, records.back().fingertip_contacts, touching});
    }
    auto f = open_out(counts_file);
    f << "object,fingertip_contacts,touching_fingers\n";
    json list = json::array();
    for (const auto& c : counts) {
      f << fmt::format("{},{},{}\n", c.object, c.fingertip_contacts, c.touching_fingers);
      list.push_back({{"object", c.object}, {"fingertip_contacts", c.fingertip_contacts}, {"touching_fingers", c.touching_fingers}});
    }
    add(counts_file);
    summary["counts"] = list;
  } else if (name == "D1" || name == "D2") {
    const fs::path file = out_dir / "telemetry.csv";
    const fs::path frames = out_dir / "frames";
    fs::create_directories(frames);
    const int focus = scenario.control.focus_finger;
    const int every = std::max(1, static_cast<int>(std::lround(1.0 / scenario.dt)));
    const auto records = write_run(scenario, file, [&](const Simulation& sim) {
      if (sim.tick() % every != 0) return;
      const fs::path pgm = frames / fmt::format("{}_{:05d}.pgm", hand::finger_name(focus), sim.tick());
      tactile::write_pgm(pgm, sim.frame(focus));
      add(pgm);
    });
    add(file);
    json modes = json::array();
    for (const auto& r : records) {
      if (modes.empty() || modes.back().get<std::string>() != r.mode) modes.push_back(r.mode);
    }
    summary["modes"] = modes;
    summary["final"] = record_summary(records.back());
  } else if (name == "D3") {
    json runs = json::array();
    for (bool feedback : {false, true}) {
      Scenario s = scenario;
      s.control.feedback = feedback;
      const fs::path file = out_dir / (feedback ? "d3_feedback.csv" : "d3_no_feedback.csv");
      const auto records = write_run(s, file);
      add(file);
      runs.push_back({{"feedback", feedback}, {"final", record_summary(records.back())}});
    }
    summary["runs"] = runs;
  }

  std::sort(out.artifacts.begin(), out.artifacts.end());
  json artifacts = json::array();
  for (const auto& a : out.artifacts) artifacts.push_back(a.generic_string());
  json manifest{{"version", std::string(kHarnessVersion)},
                {"experiment", name},
                {"seed", scenario.seed},
                {"approximate", approximate},
                {"artifacts", artifacts},
                {"scenario", json::parse(scenario_to_json(scenario))}};
  out.manifest = out_dir / "manifest.json";
  open_out(out.manifest) << manifest.dump(2) << '\n';
  open_out(out_dir / "summary.json") << summary.dump(2) << '\n';
  return out;
}

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

ReplayReport replay(const fs::path& telemetry) {
  const fs::path dir = telemetry.parent_path().empty() ? fs::path(".") : telemetry.parent_path();
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("no manifest.json beside " + telemetry.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("unreadable manifest: ") + e.what());
  }
  const std::string version = manifest.value("version", std::string());
  if (version != kHarnessVersion) {
    throw std::runtime_error("manifest version '" + version + "' does not match harness version " +
                             std::string(kHarnessVersion));
  }
  const std::string file = telemetry.filename().string();
  const auto& artifacts = manifest.at("artifacts");
  if (std::none_of(artifacts.begin(), artifacts.end(), [&](const json& a) { return a.get<std::string>() == file; })) {
    throw std::runtime_error(file + " is not an artifact of this run");
  }
  const Scenario scenario = parse_scenario(manifest.at("scenario").dump());

  static std::atomic<int> counter{0};
  const fs::path tmp = fs::temp_directory_path() / fmt::format("softhand-replay-{}-{}", ::getpid(), counter++);
  fs::remove_all(tmp);
  ReplayReport report;
  report.file = file;
  try {
    run_experiment(manifest.at("experiment").get<std::string>(), scenario, tmp);
    const auto expected = read_lines(tmp / file);
    const auto actual = read_lines(telemetry);
    const std::size_t n = std::max(expected.size(), actual.size());
    report.identical = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (i < expected.size() && i < actual.size() && expected[i] == actual[i]) continue;
      report.identical = false;
      report.line = static_cast<int>(i + 1);
      if (!expected.empty() && expected[0].rfind("tick,", 0) == 0 && i > 0) {
        report.tick = i < expected.size() ? std::stoi(expected[i].substr(0, expected[i].find(','))) : static_cast<int>(i);
      }
      report.message = i >= actual.size()     ? "telemetry is truncated"
                       : i >= expected.size() ? "telemetry has extra lines"
                                              : "content differs";
      break;
    }
    if (report.identical) {
      // Line splitting hides a missing final newline; compare sizes too.
      if (fs::file_size(tmp / file) != fs::file_size(telemetry)) {
        report.identical = false;
        report.line = static_cast<int>(actual.size());
        report.message = "trailing bytes differ";
      }
    }
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  fs::remove_all(tmp);
  return report;
}

}  // namespace softhand::harness
