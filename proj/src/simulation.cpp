#include "softhand/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace softhand::harness {

namespace {

constexpr double kSettleTime = 10.0;
constexpr double kTimeEps = 1e-9;

void translate(hand::Obstacle& obstacle, Point2 delta) {
  if (auto* c = std::get_if<Circle>(&obstacle)) {
    c->center = c->center + delta;
  } else {
    for (Point2& v : std::get<Polygon>(obstacle).vertices) v = v + delta;
  }
}

Point2 unit(Point2 v) {
  const double n = norm(v);
  return n > 0.0 ? (1.0 / n) * v : Point2{};
}

Point2 distal_tangent(const finger::FingerConfig& config, const finger::JointState& joints) {
  const auto p = finger::joint_positions(config, joints);
  return unit(p[3] - p[2]);
}

}  // namespace

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  config_ = scenario_.hand;
  objects_ = scenario_.objects;
  total_ticks_ = static_cast<int>(std::lround(scenario_.duration / scenario_.dt));
  pending_ = scenario_.disturbances;

  layout_ = tactile::hex_layout();
  const tactile::Image reference = tactile::render_frame(layout_.positions, layout_);
  const perception::TactilePipeline pipeline(scenario_.perception, reference);
  pipelines_.assign(hand::kFingerCount, pipeline);
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    analysis_[i] = &pipelines_[i].baseline();
    frames_[i] = reference;
  }

  hand_ = hand::initial_state(config_);
  const auto& m = config_.motor;
  control::MotorSetpoints start{m.agonist_reference, m.antagonist_reference};
  if (scenario_.control.initial_setpoints) {
    start = *scenario_.control.initial_setpoints;
    // Drive straight to the start pose; contact sub-steps keep it physical.
    auto fast = config_;
    fast.motor.agonist = fast.motor.antagonist = {1e9, 1e9};
    hand_ = hand::step_hand(fast, hand_, start, objects_, kSettleTime);
    hand_.time = 0.0;
  } else {
    hand_ = hand::step_hand(config_, hand_, start, objects_, scenario_.dt);
    hand_.time = 0.0;
  }
  controller_.setpoints = start;
  servo_setpoints_ = start;
  if (!scenario_.control.gesture.empty()) gesture_ = gesture_at(scenario_.control.gesture, 0.0);
  fill_record();
}

void Simulation::set_closure(double angle_deg) {
  if (!std::isfinite(angle_deg)) throw std::invalid_argument("closure angle must be finite");
  live_closure_ = true;
  closure_ = angle_deg;
}

void Simulation::inject(Disturbance disturbance) {
  if (disturbance.finger < 0 || disturbance.finger >= static_cast<int>(hand::kFingerCount)) {
    throw std::invalid_argument("disturbance finger out of range");
  }
  disturbance.time = time();
  pending_.insert(pending_.begin() + static_cast<std::ptrdiff_t>(next_disturbance_), disturbance);
}

void Simulation::apply_disturbances(double t) {
  while (next_disturbance_ < pending_.size() && pending_[next_disturbance_].time <= t + kTimeEps) {
    const Disturbance& d = pending_[next_disturbance_++];
    switch (d.type) {
      case DisturbanceType::indenter_move: {
        auto& obstacle = objects_.per_finger[scenario_.indenter.finger];
        if (obstacle) translate(*obstacle, d.magnitude * unit(scenario_.indenter.direction));
        break;
      }
      case DisturbanceType::object_force: {
        pull_force_ = d.magnitude;
        pull_until_ = d.duration > 0.0 ? d.time + d.duration : std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
          pull_direction_[i] = distal_tangent(config_.fingers[i], hand_.joints[i]);
        }
        break;
      }
      case DisturbanceType::induced_slip: {
        const Point2 dir = distal_tangent(config_.fingers[d.finger], hand_.joints[d.finger]);
        auto& obstacle = objects_.per_finger[d.finger];
        if (!obstacle) break;
        if (d.duration > 0.0) {
          motions_.push_back({d.finger, (d.magnitude / d.duration) * dir, d.time + d.duration});
        } else {
          translate(*obstacle, d.magnitude * dir);
        }
        break;
      }
    }
  }
}

void Simulation::move_objects(double t) {
  const double dt = scenario_.dt;
  for (const ActiveMotion& m : motions_) {
    if (t < m.until - kTimeEps && objects_.per_finger[m.finger]) translate(*objects_.per_finger[m.finger], dt * m.velocity);
  }
  std::erase_if(motions_, [&](const ActiveMotion& m) { return t + dt >= m.until - kTimeEps; });

  if (pull_force_ > 0.0 && t < pull_until_ - kTimeEps) {
    double normal = 0.0;
    for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
      const auto c = hand::contact_detect(config_.fingers[i], hand_.joints[i], objects_.per_finger[i],
                                          objects_.skin_offset, config_.pad_thickness);
      for (const auto& ph : c.phalanges) {
        if (ph.touching) normal += scenario_.motion.pad_stiffness * ph.penetration;
      }
    }
    if (pull_force_ > scenario_.motion.friction * normal) {
      const double step = scenario_.motion.slide_speed * dt;
      for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
        if (objects_.per_finger[i]) translate(*objects_.per_finger[i], step * pull_direction_[i]);
      }
      object_shift_ += step;
    }
  }
}

void Simulation::sense() {
  const auto& pc = scenario_.perception;
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    auto& c = hand_.contacts.fingers[i];
    c = hand::contact_detect(config_.fingers[i], hand_.joints[i], objects_.per_finger[i], objects_.skin_offset,
                             config_.pad_thickness);
    const auto& distal = c.phalanges[2];
    if (distal.touching) {
      const auto p = finger::joint_positions(config_.fingers[i], hand_.joints[i]);
      const double u = distance(p[2], distal.point);
      const auto ind = tactile::indentation_from_contact(distal.penetration, u, scenario_.mapping);
      frames_[i] = tactile::render_frame(tactile::displace_markers(layout_, ind), layout_);
    } else {
      frames_[i] = pipelines_[i].reference();
    }
    analysis_[i] = &pipelines_[i].analyze(frames_[i]);
    slip_[i] = perception::detect_slip(slip_[i], analysis_[i]->contact, pc.slip_threshold);
    FingerSensing& s = sensing_[i];
    s.touching = distal.touching;
    s.is_contact = analysis_[i]->contact.is_contact;
    s.is_slip = slip_[i].is_slip;
    s.center = analysis_[i]->contact.center;
    s.deformation = analysis_[i]->deformation;
    s.force = analysis_[i]->force;
  }
  hand_.contacts.fingertip_contact_count = hand::count_fingertip_contacts(hand_.contacts);
}

control::MotorSetpoints Simulation::control_step(double t) {
  const auto& cc = scenario_.control;
  const auto& m = config_.motor;
  switch (cc.mode) {
    case ControlMode::profile: {
      const auto stall = profile_stall_at(cc.profile, t);
      for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
        config_.fingers[i].stall_torque = stall ? *stall : scenario_.hand.fingers[i].stall_torque;
      }
      controller_.setpoints = profile_at(cc.profile, t);
      return controller_.setpoints;
    }
    case ControlMode::teleop: {
      gesture_ = live_closure_ ? closure_ : gesture_at(cc.gesture, t);
      bool contact = false;
      bool slip = false;
      for (const auto& s : sensing_) {
        contact = contact || s.is_contact;
        slip = slip || s.is_slip;
      }
      controller_ = control::fsm_step(controller_, cc.feedback && contact, cc.feedback && slip, gesture_, cc.fsm);
      return controller_.setpoints;
    }
    case ControlMode::servo: {
      const double d = sensing_[cc.focus_finger].deformation;
      const auto inc = control::deformation_servo(d, cc.servo, scenario_.dt, servo_pid_);
      servo_setpoints_.agonist = std::clamp(servo_setpoints_.agonist + inc.agonist, m.encoder_min, m.encoder_max);
      servo_setpoints_.antagonist =
          std::clamp(servo_setpoints_.antagonist + inc.antagonist, m.encoder_min, m.encoder_max);
      controller_.setpoints = servo_setpoints_;
      return servo_setpoints_;
    }
  }
  return controller_.setpoints;
}

void Simulation::step() {
  const double t = time();
  apply_disturbances(t);
  move_objects(t);
  sense();
  const auto setpoints = control_step(t);
  hand_ = hand::step_hand(config_, hand_, setpoints, objects_, scenario_.dt);
  ++tick_;
  hand_.time = time();
  fill_record();
}

void Simulation::fill_record() {
  TickRecord& r = record_;
  r.tick = tick_;
  r.time = time();
  switch (scenario_.control.mode) {
    case ControlMode::teleop: r.mode = std::string(control::to_string(controller_.mode)); break;
    case ControlMode::profile: r.mode = "PROFILE"; break;
    case ControlMode::servo: r.mode = "SERVO"; break;
  }
  r.setpoints = controller_.setpoints;
  r.agonist_encoder = hand_.motors.agonist;
  r.antagonist_encoder = hand_.motors.antagonist;
  r.gesture = gesture_;
  r.joints = hand_.joints;
  r.sensing = sensing_;
  r.fingertip_contacts = hand_.contacts.fingertip_contact_count;
  r.object_shift = object_shift_;
  r.agonist = hand_.agonist;
  r.antagonist = hand_.antagonist;
}

std::string telemetry_header() {
  std::string h = "tick,t,mode,sp_agonist,sp_antagonist,enc_agonist,enc_antagonist,gesture";
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    const auto n = hand::finger_name(i);
    h += fmt::format(",{0}_mcp,{0}_pip,{0}_dip", n);
  }
  for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
    const auto n = hand::finger_name(i);
    h += fmt::format(",{0}_touch,{0}_contact,{0}_cx,{0}_cy,{0}_d,{0}_force,{0}_slip", n);
  }
  h += ",fingertip_contacts,object_shift";
  return h;
}

std::string telemetry_row(const TickRecord& r) {
  std::string row = fmt::format("{},{:.4f},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.4f}", r.tick, r.time, r.mode,
                                r.setpoints.agonist, r.setpoints.antagonist, r.agonist_encoder,
                                r.antagonist_encoder, r.gesture);
  for (const auto& j : r.joints) row += fmt::format(",{:.9f},{:.9f},{:.9f}", j.theta[0], j.theta[1], j.theta[2]);
  for (const auto& s : r.sensing) {
    row += fmt::format(",{:d},{:d},{:.3f},{:.3f},{:.6f},{:.4f},{:d}", s.touching ? 1 : 0, s.is_contact ? 1 : 0,
                       s.center.x, s.center.y, s.deformation, s.force, s.is_slip ? 1 : 0);
  }
  row += fmt::format(",{},{:.4f}", r.fingertip_contacts, r.object_shift);
  return row;
}

}  // namespace softhand::harness
