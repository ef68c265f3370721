// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance                      run everything
//   acceptance --criterion <name>   run one criterion
//   acceptance --list               list criterion names

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "softhand/controller.hpp"
#include "softhand/experiments.hpp"
#include "softhand/perception.hpp"
#include "softhand/tactile_sim.hpp"

#ifndef SOFTHAND_SCENARIO_DIR
#define SOFTHAND_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace softhand;
using namespace softhand::harness;

namespace {

fs::path g_scenarios = SOFTHAND_SCENARIO_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Scenario scenario(const std::string& file) { return load_scenario(g_scenarios / file); }

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Synchronised closure from rest leaves the DIP straight.
Outcome sync_closure() {
  finger::FingerConfig f;
  f.type = finger::FingerType::D;
  std::mt19937_64 rng(5);
  const double reach = f.pulley_radius * (f.joint_max[0] + f.joint_max[1]);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double s = uniform(rng) * reach;
    const auto js = finger::step_finger(f, {}, {s, s});
    worst = std::max(worst, std::abs(f.pulley_radius * js.theta[2] - (s - s)));
  }
  return {worst <= 1e-9, fmt::format("max |r*theta_d - (dl_d - dl_a)| = {:.3e} mm over 100 strokes", worst)};
}

// Holding the antagonist and pulling the agonist moves only the DIP.
Outcome dip_decoupling() {
  finger::FingerConfig f;
  f.type = finger::FingerType::D;
  const double la = 10.0;
  const auto base = finger::step_finger(f, {}, {la, la});
  double drift = 0.0;
  double track = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double delta = f.pulley_radius * f.joint_max[2] * k / 200.0;
    const auto js = finger::step_finger(f, {}, {la + delta, la});
    drift = std::max({drift, std::abs(js.theta[0] - base.theta[0]), std::abs(js.theta[1] - base.theta[1])});
    track = std::max(track, std::abs(js.theta[2] - delta / f.pulley_radius));
  }
  // The A1 input-1 run shows the same shape over time.
  bool shape = false;
  for (const auto& run : run_a1(scenario("a1.json"))) {
    if (run.type != finger::FingerType::D || run.profile != "input1") continue;
    double peak_dip = 0.0;
    double peak_other = 0.0;
    for (const auto& r : run.records) {
      peak_dip = std::max(peak_dip, r.joints[1].theta[2]);
      peak_other = std::max({peak_other, r.joints[1].theta[0], r.joints[1].theta[1]});
    }
    shape = peak_dip > 1.0 && peak_other == 0.0;
  }
  return {drift < 1e-12 && track <= 1e-9 && shape,
          fmt::format("max |d theta_m|,|d theta_p| = {:.3e} rad, max |theta_d - delta/r| = {:.3e} rad, A1 input1 DIP-only: {}",
                      drift, track, shape ? "yes" : "no")};
}

Outcome workspace() {
  const auto w = run_workspace(scenario("workspace.json"));
  double a = 0.0;
  double d = 0.0;
  double p = 0.0;
  for (const auto& c : w.clouds) {
    if (c.type == finger::FingerType::A) a = c.hull_area;
    if (c.type == finger::FingerType::D) d = c.hull_area;
    if (c.type == finger::FingerType::P) p = c.hull_area;
  }
  const bool pass = w.a_curve_distance <= 1e-6 && d > 5.0 * a && p > 5.0 * a && w.seconds < 10.0;
  return {pass, fmt::format("A curve distance {:.3e} mm; hull A {:.1f}, D {:.1f} ({:.3f}x), P {:.1f} ({:.3f}x) mm^2; {:.2f} s",
                            w.a_curve_distance, a, d, d / a, p, p / a, w.seconds)};
}

Scenario grasp_run() {
  Scenario s;
  s.duration = 30.0;
  s.control.mode = ControlMode::profile;
  s.control.profile = {"grasp",
                       {{0.0, {700, 820}, {}},
                        {2.0, {200, 220}, {}},
                        {8.0, {200, 220}, {}},
                        {11.0, {450, 820}, {}},
                        {14.0, {700, 820}, {}},
                        {17.0, {300, 420}, {}},
                        {22.0, {300, 420}, {}},
                        {26.0, {700, 820}, {}},
                        {30.0, {250, 520}, {}}}};
  s.objects.per_finger[0] = Circle{{-30.0, 40.0}, 38.0};
  s.objects.per_finger[2] = Circle{{-20.0, 25.0}, 12.0};
  return s;
}

Outcome conservation() {
  const Scenario base = grasp_run();
  const auto records = simulate(base);
  const double eps = std::numeric_limits<double>::epsilon();
  double worst = 0.0;
  bool ok = true;
  for (const auto& r : records) {
    for (const auto* d : {&r.agonist, &r.antagonist}) {
      for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
        const double err = std::abs(d->spool - (d->displacement[i] + d->extension[i]));
        worst = std::max(worst, err);
        ok = ok && err <= 4.0 * eps * std::max(1.0, d->spool);
      }
    }
  }
  Scenario blocked = base;
  blocked.objects.per_finger[3] = Circle{{-25.0, 30.0}, 20.0};
  const auto other = simulate(blocked);
  bool identical = other.size() == records.size();
  bool differs = false;
  for (std::size_t k = 0; identical && k < records.size(); ++k) {
    for (std::size_t i : {0u, 1u, 2u, 4u}) identical = identical && records[k].joints[i] == other[k].joints[i];
    differs = differs || !(records[k].joints[3] == other[k].joints[3]);
  }
  return {ok && identical && differs,
          fmt::format("{} ticks, worst |s - (dl + e)| = {:.3e} mm; blocking ring keeps other fingers bitwise identical: {}",
                      records.size(), worst, identical && differs ? "yes" : "no")};
}

Outcome perception_suite() {
  using namespace perception;
  const auto layout = tactile::hex_layout();
  const auto reference = tactile::render_frame(layout.positions, layout);
  std::mt19937_64 rng(11);
  std::vector<std::string> notes;
  bool pass = true;

  // (a) detection on uncontacted frames, including sub-pixel shifted fields.
  int worst_found = 61;
  double worst_err = 0.0;
  for (int k = 0; k < 11; ++k) {
    std::vector<Point2> truth = layout.positions;
    if (k > 0) {
      const Point2 shift{uniform(rng) * 6.0 - 3.0, uniform(rng) * 6.0 - 3.0};
      for (auto& p : truth) p = p + shift;
    }
    const auto frame = tactile::render_frame(truth, layout);
    const auto found = positions(detect_markers_doh(preprocess(frame, Crop{}), DohConfig{}));
    int matched = 0;
    for (Point2 t : truth) {
      double best = std::numeric_limits<double>::infinity();
      for (Point2 f : found) best = std::min(best, distance(t, f));
      worst_err = std::max(worst_err, best);
      matched += best <= 1.0 ? 1 : 0;
    }
    if (found.size() != truth.size()) matched = std::min(matched, 0);
    worst_found = std::min(worst_found, matched);
  }
  const bool a = worst_found == 61;
  notes.push_back(fmt::format("(a) {}/61 within 1 px, worst {:.3f} px", worst_found, worst_err));

  // (b) density map against an independent summation.
  double worst_density = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int m = 2 + static_cast<int>(uniform(rng) * 80);
    std::vector<Point2> pts;
    for (int i = 0; i < m; ++i) pts.push_back({uniform(rng) * 240.0, uniform(rng) * 240.0});
    const double h = kernel_width(pts);
    const auto grid = density_map(pts, h, GridSpec{});
    std::vector<long double> acc(grid.values.size(), 0.0L);
    for (Point2 p : pts) {
      for (int j = 0; j < grid.spec.ny; ++j) {
        for (int i = 0; i < grid.spec.nx; ++i) {
          const long double dx = grid.spec.x(i) - p.x;
          const long double dy = grid.spec.y(j) - p.y;
          acc[static_cast<std::size_t>(j) * grid.spec.nx + i] +=
              std::exp(-(dx * dx + dy * dy) / (2.0L * h * h)) / (std::sqrt(2.0L * std::numbers::pi_v<long double>) * h * h);
        }
      }
    }
    for (std::size_t q = 0; q < acc.size(); ++q) {
      worst_density = std::max(worst_density, static_cast<double>(std::abs(acc[q] / m - grid.values[q])));
    }
  }
  const bool b = worst_density <= 1e-12;
  notes.push_back(fmt::format("(b) max density error {:.3e}", worst_density));

  // (c) contact centre.
  TactilePipeline pipeline({}, reference);
  const tactile::SensorMapping mapping;
  double worst_ratio = 0.0;
  int misses = 0;
  for (int k = 0; k < 100; ++k) {
    const Point2 c{90.0 + uniform(rng) * 60.0, 90.0 + uniform(rng) * 60.0};
    const double depth = 0.3 + uniform(rng) * 0.7;
    const auto frame = tactile::render_frame(tactile::displace_markers(layout, tactile::indentation_at(c, depth, mapping)), layout);
    const auto& r = pipeline.analyze(frame);
    if (!r.contact.is_contact) {
      ++misses;
      continue;
    }
    worst_ratio = std::max(worst_ratio, distance(r.contact.center, c) / r.h);
  }
  const bool c = misses == 0 && worst_ratio <= 0.5;
  notes.push_back(fmt::format("(c) {} misses, worst centre error {:.3f} h", misses, worst_ratio));

  // (d) SSIM identity and monotone deformation.
  const bool identity = ssim(reference, reference) == 1.0;
  bool monotone = true;
  double prev = -1.0;
  std::string ds;
  for (int k = 1; k <= 9; ++k) {
    const auto frame = tactile::render_frame(
        tactile::displace_markers(layout, tactile::indentation_at({120.0, 120.0}, k / 10.0, mapping)), layout);
    const double d = deformation(frame, reference);
    monotone = monotone && d > prev;
    prev = d;
    ds += fmt::format("{}{:.3f}", k == 1 ? "" : " ", d);
  }
  notes.push_back(fmt::format("(d) SSIM(x,x) = 1: {}, deformation {} [{}]", identity ? "yes" : "no",
                              monotone ? "strictly increasing" : "NOT monotone", ds));
  pass = a && b && c && identity && monotone;
  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {pass, detail};
}

Outcome constants() {
  using namespace perception;
  tactile::Image img(2, 1);
  img.at(0, 0) = 180;
  img.at(1, 0) = 181;
  const auto bin = preprocess(img, Crop{0, 0, 2, 1});
  const bool threshold = kDefaultThreshold == 180 && !bin.at(0, 0) && bin.at(1, 0);
  const bool open = control::map_gesture(180.0) == control::MotorSetpoints{700.0, 820.0};
  const bool closed = control::map_gesture(control::GestureMap{}.closed_angle) == control::MotorSetpoints{200.0, 220.0};
  control::MotorSetpoints sp{450.0, 820.0};
  for (int k = 0; k < 100; ++k) sp = control::dip_compensation(sp, 25.0);
  const bool saturation = sp.antagonist - sp.agonist == 500.0;
  control::ControllerState hold{control::Mode::CONTACT_HOLD, {400.0, 500.0}, 0};
  const bool keep = control::fsm_step(hold, true, false, 170.0).mode == control::Mode::CONTACT_HOLD;
  const bool release = control::fsm_step(hold, true, false, 170.01).mode == control::Mode::SYNC;
  return {threshold && open && closed && saturation && keep && release,
          fmt::format("threshold 180 {}, open (700,820) {}, closed (200,220) {}, DIP saturation at differential {:.0f}, "
                      "hold at 170 {}, release above 170 {}",
                      threshold ? "ok" : "bad", open ? "ok" : "bad", closed ? "ok" : "bad",
                      sp.antagonist - sp.agonist, keep ? "ok" : "bad", release ? "ok" : "bad")};
}

Outcome d1() {
  const Scenario s = scenario("d1.json");
  const auto records = simulate(s);
  const int focus = s.control.focus_finger;
  const double target = s.control.servo.target;
  std::vector<double> times;
  for (const auto& d : s.disturbances) times.push_back(d.time);
  times.push_back(s.duration + 1.0);
  bool pass = !s.disturbances.empty();
  std::string detail;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    // Settled from the first tick after which d stays in band until the next disturbance.
    double settled = -1.0;
    double force = 0.0;
    for (const auto& r : records) {
      if (r.time <= times[k] || r.time > times[k + 1]) continue;
      const bool in_band = std::abs(r.sensing[focus].deformation - target) <= 0.01;
      if (in_band && settled < 0.0) settled = r.time;
      if (!in_band) settled = -1.0;
      force = r.sensing[focus].force;
    }
    const double after = settled < 0.0 ? std::numeric_limits<double>::infinity() : settled - times[k];
    const bool ok = after <= 2.0 && std::abs(force - 2.0) <= 0.4;
    pass = pass && ok;
    detail += fmt::format("{}t={:.1f}s settles in {:.2f}s, F={:.2f}N", detail.empty() ? "" : "; ", times[k], after, force);
  }
  return {pass, detail};
}

Outcome d2() {
  const auto records = simulate(scenario("d2.json"));
  std::vector<std::string> modes;
  for (const auto& r : records) {
    if (modes.empty() || modes.back() != r.mode) modes.push_back(r.mode);
  }
  const std::vector<std::string> expected{"SYNC", "CONTACT_HOLD", "SLIP_COMP", "CONTACT_HOLD"};
  bool frozen = true;
  double gmin = 1e9;
  double gmax = -1e9;
  bool monotone = true;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const auto& prev = records[k - 1];
    const auto& r = records[k];
    if (r.mode == "CONTACT_HOLD" && prev.mode == "CONTACT_HOLD") {
      frozen = frozen && r.setpoints == prev.setpoints;
      gmin = std::min(gmin, r.gesture);
      gmax = std::max(gmax, r.gesture);
    }
    if (r.mode == "SLIP_COMP") {
      const double now = r.setpoints.antagonist - r.setpoints.agonist;
      const double before = prev.setpoints.antagonist - prev.setpoints.agonist;
      monotone = monotone && now >= before;
    }
  }
  std::string seq;
  for (const auto& m : modes) seq += (seq.empty() ? "" : "->") + m;
  const bool wiggled = gmax - gmin >= 5.0;
  return {modes == expected && frozen && wiggled && monotone,
          fmt::format("modes {}; setpoints frozen in hold over a {:.1f} deg gesture wiggle: {}; differential non-decreasing in slip: {}",
                      seq, gmax - gmin, frozen ? "yes" : "no", monotone ? "yes" : "no")};
}

Outcome d3() {
  const Scenario base = scenario("d3.json");
  double onset = base.duration;
  for (const auto& d : base.disturbances) {
    if (d.type == DisturbanceType::object_force) onset = std::min(onset, d.time);
  }
  Scenario open = base;
  open.control.feedback = false;
  Scenario closed = base;
  closed.control.feedback = true;
  const auto a = simulate(open);
  const auto b = simulate(closed);
  const auto count_at = [](const std::vector<TickRecord>& rs, double t) {
    for (const auto& r : rs) {
      if (r.time >= t) return r.fingertip_contacts;
    }
    return -1;
  };
  int min_after = 5;
  for (const auto& r : b) {
    if (r.time >= onset) min_after = std::min(min_after, r.fingertip_contacts);
  }
  const bool grasped = count_at(a, onset) > 0 && count_at(b, onset) > 0;
  const bool lost = a.back().fingertip_contacts == 0;
  const bool kept = min_after > 0;
  return {grasped && lost && kept,
          fmt::format("before pull: {} / {} contacts; without feedback ends with {} (object moved {:.1f} mm); "
                      "with feedback never below {} (object moved {:.1f} mm)",
                      count_at(a, onset), count_at(b, onset), a.back().fingertip_contacts, a.back().object_shift,
                      min_after, b.back().object_shift)};
}

Outcome timing() {
  const hand::HandConfig config = hand::default_hand_config();
  const double dt = 1e-4;
  const auto stroke = [&](hand::HandState s, control::MotorSetpoints sp) {
    double t = 0.0;
    while (!(s.motors.agonist == sp.agonist && s.motors.antagonist == sp.antagonist) && t < 5.0) {
      s = hand::step_hand(config, s, sp, {}, dt);
      t += dt;
    }
    return std::make_pair(t, s);
  };
  const auto [close_t, closed] = stroke(hand::initial_state(config), control::map_gesture(30.0));
  const auto [open_t, opened] = stroke(closed, control::map_gesture(180.0));
  (void)opened;
  return {std::abs(close_t - 0.46) <= 0.05 && std::abs(open_t - 0.59) <= 0.05,
          fmt::format("full close {:.3f} s, full open {:.3f} s", close_t, open_t)};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary);
  std::ifstream fb(b, std::ios::binary);
  std::ostringstream sa;
  std::ostringstream sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return fa && fb && sa.str() == sb.str();
}

Outcome replay_determinism() {
  const std::vector<std::pair<std::string, std::string>> runs{
      {"A1", "a1.json"}, {"workspace", "workspace.json"}, {"B1", "b1.json"}, {"C", "c.json"},
      {"D1", "d1.json"}, {"D2", "d2.json"},             {"D3", "d3.json"}};
  const fs::path root = fs::temp_directory_path() / fmt::format("softhand-acceptance-{}", ::getpid());
  fs::remove_all(root);
  bool pass = true;
  int files = 0;
  int replays = 0;
  std::string failures;
  for (const auto& [name, file] : runs) {
    const Scenario s = scenario(file);
    const auto first = run_experiment(name, s, root / name / "a");
    run_experiment(name, s, root / name / "b");
    for (const auto& art : first.artifacts) {
      ++files;
      if (!same_bytes(root / name / "a" / art, root / name / "b" / art)) {
        pass = false;
        failures += fmt::format(" {}/{} differs between runs;", name, art.string());
      }
    }
    const auto csv = std::find_if(first.artifacts.begin(), first.artifacts.end(),
                                  [](const fs::path& p) { return p.extension() == ".csv"; });
    const auto report = replay(root / name / "a" / *csv);
    ++replays;
    if (!report.identical) {
      pass = false;
      failures += fmt::format(" replay of {}/{} diverges at line {};", name, csv->string(), report.line);
    }
  }
  // A corrupted copy must be caught at the corrupted tick.
  const fs::path d2 = root / "D2" / "a" / "telemetry.csv";
  std::string text;
  {
    std::ifstream in(d2, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::size_t pos = 0;
  for (int line = 1; line < 101; ++line) pos = text.find('\n', pos) + 1;
  text[pos + 6] = static_cast<char>(text[pos + 6] ^ 0x01);
  std::ofstream(d2, std::ios::binary) << text;
  const auto flipped = replay(d2);
  const bool caught = !flipped.identical && flipped.line == 101 && flipped.tick == 100;
  fs::remove_all(root);
  return {pass && caught, fmt::format("{} artifacts identical across two runs, {} replays identical, flipped bit caught at tick {}{}",
                                      files, replays, flipped.tick, failures)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> kAll{
      {"sync_closure", sync_closure},
      {"dip_decoupling", dip_decoupling},
      {"workspace", workspace},
      {"conservation", conservation},
      {"perception", perception_suite},
      {"constants", constants},
      {"d1", d1},
      {"d2", d2},
      {"d3", d3},
      {"timing", timing},
      {"replay", replay_determinism},
  };
  return kAll;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  bool list = false;
  std::string dir;
  app.add_option("--criterion", only, "Run a single criterion");
  app.add_flag("--list", list, "List criteria");
  app.add_option("--scenarios", dir, "Scenario directory");
  CLI11_PARSE(app, argc, argv);
  if (!dir.empty()) g_scenarios = dir;

  if (list) {
    for (const auto& [name, fn] : criteria()) std::cout << name << '\n';
    return 0;
  }
  int failed = 0;
  int ran = 0;
  for (const auto& [name, fn] : criteria()) {
    if (!only.empty() && name != only) continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << fmt::format("{} {:<13} {} [{:.1f}s]", o.pass ? "PASS" : "FAIL", name, o.detail, secs) << std::endl;
    failed += o.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
