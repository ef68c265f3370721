#include "softhand/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace softhand::harness {

using nlohmann::json;

std::string_view to_string(DisturbanceType type) {
  switch (type) {
    case DisturbanceType::indenter_move: return "indenter_move";
    case DisturbanceType::object_force: return "object_force";
    case DisturbanceType::induced_slip: return "induced_slip";
  }
  return "?";
}

DisturbanceType disturbance_type_from_string(std::string_view name) {
  for (auto t : {DisturbanceType::indenter_move, DisturbanceType::object_force, DisturbanceType::induced_slip}) {
    if (to_string(t) == name) return t;
  }
  throw std::invalid_argument("unknown disturbance type '" + std::string(name) + "'");
}

std::string_view to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::profile: return "profile";
    case ControlMode::teleop: return "teleop";
    case ControlMode::servo: return "servo";
  }
  return "?";
}

ControlMode control_mode_from_string(std::string_view name) {
  for (auto m : {ControlMode::profile, ControlMode::teleop, ControlMode::servo}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown control mode '" + std::string(name) + "'");
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("scenario duration must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("scenario dt must be positive");
  hand.validate();
  objects.validate();
  for (const auto& o : object_set) o.shape.validate();
  for (std::size_t i = 1; i < disturbances.size(); ++i) {
    if (disturbances[i].time < disturbances[i - 1].time) {
      throw std::invalid_argument("disturbance schedule must be sorted by time");
    }
  }
  for (const auto& d : disturbances) {
    if (d.finger < 0 || d.finger >= static_cast<int>(hand::kFingerCount)) {
      throw std::invalid_argument("disturbance finger out of range");
    }
  }
  const auto sorted = [](const auto& pts) {
    return std::is_sorted(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  };
  if (!sorted(control.gesture)) throw std::invalid_argument("gesture trace must be sorted by time");
  if (!sorted(control.profile.points)) throw std::invalid_argument("motor profile must be sorted by time");
  for (const auto& p : profiles) {
    if (!sorted(p.points)) throw std::invalid_argument("motor profile '" + p.name + "' must be sorted by time");
  }
  if (control.focus_finger < 0 || control.focus_finger >= static_cast<int>(hand::kFingerCount)) {
    throw std::invalid_argument("focus finger out of range");
  }
  if (workspace_samples < 1) throw std::invalid_argument("workspace_samples must be >= 1");
}

namespace {

int finger_index(const json& j) {
  if (j.is_number_integer()) {
    const int i = j.get<int>();
    if (i < 0 || i >= static_cast<int>(hand::kFingerCount)) throw std::invalid_argument("finger index out of range");
    return i;
  }
  const auto name = j.get<std::string>();
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    if (hand::finger_name(i) == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown finger '" + name + "'");
}

Point2 point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
json to_json(Point2 p) { return json::array({p.x, p.y}); }

template <std::size_t N>
std::array<double, N> array_from(const json& j) {
  if (!j.is_array() || j.size() != N) throw std::invalid_argument("expected an array of " + std::to_string(N));
  std::array<double, N> a{};
  for (std::size_t i = 0; i < N; ++i) a[i] = j[i].get<double>();
  return a;
}

std::string_view joint_name(finger::Joint j) {
  switch (j) {
    case finger::Joint::MCP: return "MCP";
    case finger::Joint::PIP: return "PIP";
    case finger::Joint::DIP: return "DIP";
  }
  return "?";
}

finger::Joint joint_from(const std::string& s) {
  if (s == "MCP") return finger::Joint::MCP;
  if (s == "PIP") return finger::Joint::PIP;
  if (s == "DIP") return finger::Joint::DIP;
  throw std::invalid_argument("unknown joint '" + s + "'");
}

void apply_finger(const json& j, finger::FingerConfig& f) {
  if (j.contains("type")) f.type = finger::finger_type_from_string(j["type"].get<std::string>());
  if (j.contains("link_lengths")) f.link_lengths = array_from<3>(j["link_lengths"]);
  if (j.contains("pulley_radius")) f.pulley_radius = j["pulley_radius"].get<double>();
  if (j.contains("joint_max")) f.joint_max = array_from<3>(j["joint_max"]);
  if (j.contains("band_stiffness")) f.band_stiffness = array_from<3>(j["band_stiffness"]);
  if (j.contains("stall_torque")) f.stall_torque = j["stall_torque"].get<double>();
  if (j.contains("flexion_priority")) {
    const auto& p = j["flexion_priority"];
    if (!p.is_array() || p.size() != 3) throw std::invalid_argument("flexion_priority needs three joints");
    for (std::size_t i = 0; i < 3; ++i) f.flexion_priority[i] = joint_from(p[i].get<std::string>());
  }
}

json finger_json(const finger::FingerConfig& f) {
  json p = json::array();
  for (auto jn : f.flexion_priority) p.push_back(std::string(joint_name(jn)));
  return {{"type", std::string(finger::to_string(f.type))},
          {"link_lengths", f.link_lengths},
          {"pulley_radius", f.pulley_radius},
          {"joint_max", f.joint_max},
          {"band_stiffness", f.band_stiffness},
          {"stall_torque", f.stall_torque},
          {"flexion_priority", p}};
}

hand::HandConfig hand_from(const json& j) {
  hand::HandConfig h = hand::default_hand_config();
  if (j.contains("finger")) {
    for (auto& f : h.fingers) apply_finger(j["finger"], f);
  }
  if (j.contains("finger_type")) {
    const auto t = finger::finger_type_from_string(j["finger_type"].get<std::string>());
    for (auto& f : h.fingers) f.type = t;
  }
  if (j.contains("fingers")) {
    const auto& fs = j["fingers"];
    if (!fs.is_array() || fs.size() != hand::kFingerCount) throw std::invalid_argument("hand needs five fingers");
    for (std::size_t i = 0; i < hand::kFingerCount; ++i) apply_finger(fs[i], h.fingers[i]);
  }
  h.synergy_stiffness = j.value("synergy_stiffness", h.synergy_stiffness);
  h.pad_thickness = j.value("pad_thickness", h.pad_thickness);
  h.max_substep_angle = j.value("max_substep_angle", h.max_substep_angle);
  if (j.contains("motor")) {
    const auto& m = j["motor"];
    auto& mc = h.motor;
    mc.agonist_reference = m.value("agonist_reference", mc.agonist_reference);
    mc.antagonist_reference = m.value("antagonist_reference", mc.antagonist_reference);
    mc.encoder_min = m.value("encoder_min", mc.encoder_min);
    mc.encoder_max = m.value("encoder_max", mc.encoder_max);
    mc.spool_gain = m.value("spool_gain", mc.spool_gain);
    if (m.contains("agonist_rates")) {
      const auto r = array_from<2>(m["agonist_rates"]);
      mc.agonist = {r[0], r[1]};
    }
    if (m.contains("antagonist_rates")) {
      const auto r = array_from<2>(m["antagonist_rates"]);
      mc.antagonist = {r[0], r[1]};
    }
  }
  return h;
}

json hand_json(const hand::HandConfig& h) {
  json fingers = json::array();
  for (const auto& f : h.fingers) fingers.push_back(finger_json(f));
  const auto& m = h.motor;
  return {{"fingers", fingers},
          {"synergy_stiffness", h.synergy_stiffness},
          {"pad_thickness", h.pad_thickness},
          {"max_substep_angle", h.max_substep_angle},
          {"motor",
           {{"agonist_reference", m.agonist_reference},
            {"antagonist_reference", m.antagonist_reference},
            {"encoder_min", m.encoder_min},
            {"encoder_max", m.encoder_max},
            {"spool_gain", m.spool_gain},
            {"agonist_rates", {m.agonist.close, m.agonist.open}},
            {"antagonist_rates", {m.antagonist.close, m.antagonist.open}}}}};
}

hand::Obstacle obstacle_from(const json& j) {
  if (j.contains("circle")) {
    const auto& c = j["circle"];
    return Circle{point_from(c.at("center")), c.at("radius").get<double>()};
  }
  if (j.contains("polygon")) {
    Polygon p;
    for (const auto& v : j["polygon"]) p.vertices.push_back(point_from(v));
    if (!is_convex(p)) throw std::invalid_argument("polygon obstacles must be convex");
    return normalized(p);
  }
  throw std::invalid_argument("obstacle needs a circle or a polygon");
}

hand::ObjectShape objects_from(const json& j) {
  hand::ObjectShape o;
  o.skin_offset = j.value("skin_offset", o.skin_offset);
  for (const auto& s : j.value("shapes", json::array())) {
    const hand::Obstacle ob = obstacle_from(s);
    const json& f = s.at("finger");
    if (f.is_string() && f.get<std::string>() == "all") {
      for (auto& slot : o.per_finger) slot = ob;
    } else {
      o.per_finger[finger_index(f)] = ob;
    }
  }
  o.validate();
  return o;
}

json objects_json(const hand::ObjectShape& o) {
  json shapes = json::array();
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    if (!o.per_finger[i]) continue;
    json s{{"finger", std::string(hand::finger_name(i))}};
    if (const auto* c = std::get_if<Circle>(&*o.per_finger[i])) {
      s["circle"] = {{"center", to_json(c->center)}, {"radius", c->radius}};
    } else {
      json v = json::array();
      for (Point2 p : std::get<Polygon>(*o.per_finger[i]).vertices) v.push_back(to_json(p));
      s["polygon"] = v;
    }
    shapes.push_back(s);
  }
  return {{"skin_offset", o.skin_offset}, {"shapes", shapes}};
}

MotorProfile profile_from(const json& j) {
  MotorProfile p;
  p.name = j.value("name", std::string("profile"));
  for (const auto& pt : j.at("points")) {
    ProfilePoint q;
    q.t = pt.at("t").get<double>();
    q.setpoints = {pt.at("agonist").get<double>(), pt.at("antagonist").get<double>()};
    if (pt.contains("antagonist_stall")) q.antagonist_stall = pt["antagonist_stall"].get<double>();
    p.points.push_back(q);
  }
  return p;
}

json profile_json(const MotorProfile& p) {
  json pts = json::array();
  for (const auto& q : p.points) {
    json o{{"t", q.t}, {"agonist", q.setpoints.agonist}, {"antagonist", q.setpoints.antagonist}};
    if (q.antagonist_stall) o["antagonist_stall"] = *q.antagonist_stall;
    pts.push_back(o);
  }
  return {{"name", p.name}, {"points", pts}};
}

Scenario scenario_from(const json& j) {
  Scenario s;
  s.name = j.value("name", std::string("unnamed"));
  s.experiment = j.value("experiment", std::string());
  s.duration = j.value("duration", s.duration);
  s.dt = j.value("dt", s.dt);
  s.seed = j.value("seed", s.seed);
  s.workspace_samples = j.value("workspace_samples", s.workspace_samples);
  if (j.contains("hand")) s.hand = hand_from(j["hand"]);
  if (j.contains("objects")) s.objects = objects_from(j["objects"]);
  for (const auto& o : j.value("object_set", json::array())) {
    s.object_set.push_back({o.at("name").get<std::string>(), objects_from(o.at("objects"))});
  }
  for (const auto& p : j.value("profiles", json::array())) s.profiles.push_back(profile_from(p));
  if (j.contains("finger_types")) {
    s.finger_types.clear();
    for (const auto& t : j["finger_types"]) s.finger_types.push_back(finger::finger_type_from_string(t.get<std::string>()));
  }
  if (j.contains("control")) {
    const auto& c = j["control"];
    auto& cc = s.control;
    if (c.contains("mode")) cc.mode = control_mode_from_string(c["mode"].get<std::string>());
    cc.feedback = c.value("feedback", cc.feedback);
    cc.live = c.value("live", cc.live);
    if (c.contains("gesture")) {
      const auto& g = c["gesture"];
      cc.synthetic_gesture = g.value("synthetic", true);
      for (const auto& p : g.at("points")) cc.gesture.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    if (c.contains("profile")) cc.profile = profile_from(c["profile"]);
    if (c.contains("initial_setpoints")) {
      const auto a = array_from<2>(c["initial_setpoints"]);
      cc.initial_setpoints = control::MotorSetpoints{a[0], a[1]};
    }
    if (c.contains("fsm")) {
      const auto& f = c["fsm"];
      auto& fc = cc.fsm;
      fc.map.closed_angle = f.value("closed_angle", fc.map.closed_angle);
      fc.release_angle = f.value("release_angle", fc.release_angle);
      fc.slip_clear_ticks = f.value("slip_clear_ticks", fc.slip_clear_ticks);
      fc.dip_step = f.value("dip_step", fc.dip_step);
      fc.saturation_differential = f.value("saturation_differential", fc.saturation_differential);
    }
    if (c.contains("servo")) {
      const auto& v = c["servo"];
      auto& g = cc.servo;
      g.pid.kp = v.value("kp", g.pid.kp);
      g.pid.ki = v.value("ki", g.pid.ki);
      g.pid.kd = v.value("kd", g.pid.kd);
      g.pid.integral_limit = v.value("integral_limit", g.pid.integral_limit);
      g.pid.output_limit = v.value("output_limit", g.pid.output_limit);
      g.target = v.value("target", g.target);
    }
    if (c.contains("focus_finger")) cc.focus_finger = finger_index(c["focus_finger"]);
  }
  for (const auto& d : j.value("disturbances", json::array())) {
    Disturbance x;
    x.time = d.at("time").get<double>();
    x.type = disturbance_type_from_string(d.at("type").get<std::string>());
    x.magnitude = d.value("magnitude", 0.0);
    x.duration = d.value("duration", 0.0);
    if (d.contains("finger")) x.finger = finger_index(d["finger"]);
    s.disturbances.push_back(x);
  }
  if (j.contains("motion")) {
    const auto& m = j["motion"];
    s.motion.friction = m.value("friction", s.motion.friction);
    s.motion.pad_stiffness = m.value("pad_stiffness", s.motion.pad_stiffness);
    s.motion.slide_speed = m.value("slide_speed", s.motion.slide_speed);
  }
  if (j.contains("indenter")) {
    const auto& m = j["indenter"];
    if (m.contains("finger")) s.indenter.finger = finger_index(m["finger"]);
    if (m.contains("direction")) s.indenter.direction = point_from(m["direction"]);
  }
  if (j.contains("perception")) {
    const auto& p = j["perception"];
    auto& pc = s.perception;
    if (p.contains("crop")) {
      const auto& c = p["crop"];
      pc.crop = {c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>(), c.at(3).get<int>()};
    }
    pc.threshold = p.value("threshold", pc.threshold);
    pc.doh.sigma_min = p.value("sigma_min", pc.doh.sigma_min);
    pc.doh.sigma_max = p.value("sigma_max", pc.doh.sigma_max);
    pc.doh.scales = p.value("scales", pc.doh.scales);
    pc.doh.response_floor = p.value("response_floor", pc.doh.response_floor);
    if (p.contains("grid")) {
      const auto& g = p["grid"];
      pc.grid.x0 = g.value("x0", pc.grid.x0);
      pc.grid.y0 = g.value("y0", pc.grid.y0);
      pc.grid.step = g.value("step", pc.grid.step);
      pc.grid.nx = g.value("nx", pc.grid.nx);
      pc.grid.ny = g.value("ny", pc.grid.ny);
    }
    pc.contact_factor = p.value("contact_factor", pc.contact_factor);
    pc.slip_threshold = p.value("slip_threshold", pc.slip_threshold);
    pc.calibration.force_slope = p.value("force_slope", pc.calibration.force_slope);
    pc.calibration.target = p.value("target", pc.calibration.target);
  }
  if (j.contains("mapping")) {
    const auto& m = j["mapping"];
    auto& mc = s.mapping;
    mc.px_per_mm = m.value("px_per_mm", mc.px_per_mm);
    mc.phalanx_length = m.value("phalanx_length", mc.phalanx_length);
    mc.max_penetration = m.value("max_penetration", mc.max_penetration);
    mc.radius_min = m.value("radius_min", mc.radius_min);
    mc.radius_max = m.value("radius_max", mc.radius_max);
  }
  s.validate();
  return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  try {
    return scenario_from(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed scenario: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["experiment"] = s.experiment;
  j["duration"] = s.duration;
  j["dt"] = s.dt;
  j["seed"] = s.seed;
  j["workspace_samples"] = s.workspace_samples;
  j["hand"] = hand_json(s.hand);
  j["objects"] = objects_json(s.objects);
  j["object_set"] = json::array();
  for (const auto& o : s.object_set) j["object_set"].push_back({{"name", o.name}, {"objects", objects_json(o.shape)}});
  j["profiles"] = json::array();
  for (const auto& p : s.profiles) j["profiles"].push_back(profile_json(p));
  j["finger_types"] = json::array();
  for (auto t : s.finger_types) j["finger_types"].push_back(std::string(finger::to_string(t)));

  const auto& c = s.control;
  json g = json::array();
  for (const auto& p : c.gesture) g.push_back({p.t, p.angle});
  json control{{"mode", std::string(to_string(c.mode))},
               {"feedback", c.feedback},
               {"live", c.live},
               {"gesture", {{"synthetic", c.synthetic_gesture}, {"points", g}}},
               {"profile", profile_json(c.profile)},
               {"fsm",
                {{"closed_angle", c.fsm.map.closed_angle},
                 {"release_angle", c.fsm.release_angle},
                 {"slip_clear_ticks", c.fsm.slip_clear_ticks},
                 {"dip_step", c.fsm.dip_step},
                 {"saturation_differential", c.fsm.saturation_differential}}},
               {"servo",
                {{"kp", c.servo.pid.kp},
                 {"ki", c.servo.pid.ki},
                 {"kd", c.servo.pid.kd},
                 {"integral_limit", c.servo.pid.integral_limit},
                 {"output_limit", c.servo.pid.output_limit},
                 {"target", c.servo.target}}},
               {"focus_finger", std::string(hand::finger_name(c.focus_finger))}};
  if (c.initial_setpoints) control["initial_setpoints"] = {c.initial_setpoints->agonist, c.initial_setpoints->antagonist};
  j["control"] = control;

  j["disturbances"] = json::array();
  for (const auto& d : s.disturbances) {
    j["disturbances"].push_back({{"time", d.time},
                                 {"type", std::string(to_string(d.type))},
                                 {"magnitude", d.magnitude},
                                 {"duration", d.duration},
                                 {"finger", std::string(hand::finger_name(d.finger))}});
  }
  j["motion"] = {{"friction", s.motion.friction},
                 {"pad_stiffness", s.motion.pad_stiffness},
                 {"slide_speed", s.motion.slide_speed}};
  j["indenter"] = {{"finger", std::string(hand::finger_name(s.indenter.finger))},
                   {"direction", to_json(s.indenter.direction)}};
  const auto& p = s.perception;
  j["perception"] = {{"crop", {p.crop.x0, p.crop.y0, p.crop.width, p.crop.height}},
                     {"threshold", p.threshold},
                     {"sigma_min", p.doh.sigma_min},
                     {"sigma_max", p.doh.sigma_max},
                     {"scales", p.doh.scales},
                     {"response_floor", p.doh.response_floor},
                     {"grid", {{"x0", p.grid.x0}, {"y0", p.grid.y0}, {"step", p.grid.step}, {"nx", p.grid.nx}, {"ny", p.grid.ny}}},
                     {"contact_factor", p.contact_factor},
                     {"slip_threshold", p.slip_threshold},
                     {"force_slope", p.calibration.force_slope},
                     {"target", p.calibration.target}};
  const auto& m = s.mapping;
  j["mapping"] = {{"px_per_mm", m.px_per_mm},
                  {"phalanx_length", m.phalanx_length},
                  {"max_penetration", m.max_penetration},
                  {"radius_min", m.radius_min},
                  {"radius_max", m.radius_max}};
  return j.dump(2);
}

std::filesystem::path resolve_config_path(const std::filesystem::path& path) {
  if (path.is_absolute() || std::filesystem::exists(path)) return path;
  if (const char* dir = std::getenv("SOFTHAND_CONFIG_DIR"); dir && *dir) {
    const auto candidate = std::filesystem::path(dir) / path;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return path;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const auto resolved = resolve_config_path(path);
  std::ifstream in(resolved);
  if (!in) throw std::invalid_argument("cannot open scenario " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

double gesture_at(const std::vector<GesturePoint>& trace, double t) {
  if (trace.empty()) return 180.0;
  if (t <= trace.front().t) return trace.front().angle;
  if (t >= trace.back().t) return trace.back().angle;
  const auto hi = std::upper_bound(trace.begin(), trace.end(), t,
                                   [](double v, const GesturePoint& p) { return v < p.t; });
  const auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return lo->angle + w * (hi->angle - lo->angle);
}

control::MotorSetpoints profile_at(const MotorProfile& profile, double t) {
  const auto& pts = profile.points;
  if (pts.empty()) return {700.0, 820.0};
  if (t <= pts.front().t) return pts.front().setpoints;
  if (t >= pts.back().t) return pts.back().setpoints;
  const auto hi = std::upper_bound(pts.begin(), pts.end(), t, [](double v, const ProfilePoint& p) { return v < p.t; });
  const auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return {lo->setpoints.agonist + w * (hi->setpoints.agonist - lo->setpoints.agonist),
          lo->setpoints.antagonist + w * (hi->setpoints.antagonist - lo->setpoints.antagonist)};
}

std::optional<double> profile_stall_at(const MotorProfile& profile, double t) {
  std::optional<double> stall;
  for (const auto& p : profile.points) {
    if (p.t > t) break;
    if (p.antagonist_stall) stall = p.antagonist_stall;
  }
  return stall;
}

}  // namespace softhand::harness
