#include "softhand/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace softhand::hand {

using finger::FingerConfig;
using finger::JointMask;
using finger::JointState;
using finger::kJointCount;

std::string_view finger_name(std::size_t index) {
  static constexpr std::array<std::string_view, kFingerCount> kNames{"thumb", "index", "middle", "ring",
                                                                     "little"};
  return index < kFingerCount ? kNames[index] : "?";
}

void HandConfig::validate() const {
  for (const auto& f : fingers) f.validate();
  if (!(synergy_stiffness > 0.0)) throw std::invalid_argument("synergy stiffness must be positive");
  if (!(motor.spool_gain > 0.0)) throw std::invalid_argument("spool gain must be positive");
  if (!(motor.encoder_min < motor.encoder_max)) throw std::invalid_argument("empty encoder range");
  for (const MotorRates& r : {motor.agonist, motor.antagonist}) {
    if (!(r.close > 0.0 && r.open > 0.0)) throw std::invalid_argument("motor rates must be positive");
  }
  if (!(pad_thickness > 0.0)) throw std::invalid_argument("pad thickness must be positive");
  if (!(max_substep_angle > 0.0)) throw std::invalid_argument("sub-step angle must be positive");
}

void ObjectShape::validate() const {
  if (!(skin_offset >= 0.0)) throw std::invalid_argument("skin offset must be non-negative");
  for (const auto& obstacle : per_finger) {
    if (!obstacle) continue;
    if (const auto* c = std::get_if<Circle>(&*obstacle); c && !(c->radius > 0.0)) {
      throw std::invalid_argument("circle radius must be positive");
    }
    if (const auto* p = std::get_if<Polygon>(&*obstacle); p && !is_convex(*p)) {
      throw std::invalid_argument("polygon obstacles must be convex");
    }
  }
}

HandConfig default_hand_config() {
  HandConfig config;
  for (auto& f : config.fingers) f.type = finger::FingerType::D;
  return config;
}

double encoders_to_spool(double encoder, double reference, const MotorConfig& motor) {
  if (encoder < motor.encoder_min || encoder > motor.encoder_max) {
    throw std::out_of_range("encoder " + std::to_string(encoder) + " outside range");
  }
  return motor.spool_gain * (reference - encoder);
}

double spool_to_encoder(double spool, double reference, const MotorConfig& motor) {
  const double encoder = reference - spool / motor.spool_gain;
  if (encoder < motor.encoder_min || encoder > motor.encoder_max) {
    throw std::out_of_range("spool " + std::to_string(spool) + " maps outside encoder range");
  }
  return encoder;
}

DifferentialState distribute(double spool, std::span<const double, kFingerCount> limits) {
  DifferentialState d;
  d.spool = spool;
  for (std::size_t i = 0; i < kFingerCount; ++i) {
    d.displacement[i] = std::min(spool, limits[i]);
    d.extension[i] = spool - d.displacement[i];
  }
  return d;
}

FingerContact contact_detect(const FingerConfig& config, const JointState& joints,
                             const std::optional<Obstacle>& obstacle, double skin_offset, double pad_thickness) {
  FingerContact out;
  if (!obstacle) return out;
  const finger::JointPositions p = finger::joint_positions(config, joints);
  bool distal_blocked = false;
  for (int k = static_cast<int>(kJointCount) - 1; k >= 0; --k) {
    const Segment phalanx{p[k], p[k + 1]};
    PhalanxContact& c = out.phalanges[k];
    c.clearance = std::visit([&](const auto& shape) { return signed_distance(phalanx, shape, &c.point); }, *obstacle);
    c.penetration = std::max(0.0, skin_offset + pad_thickness - c.clearance);
    c.touching = c.penetration > 0.0;
    distal_blocked = distal_blocked || c.clearance <= skin_offset;
    out.blocked.set(k, distal_blocked);
    if (c.touching && (out.deepest < 0 || c.penetration > out.penetration)) {
      out.deepest = k;
      out.penetration = c.penetration;
      out.point = c.point;
    }
  }
  return out;
}

int count_fingertip_contacts(const ContactReport& report) {
  return static_cast<int>(std::count_if(report.fingers.begin(), report.fingers.end(),
                                        [](const FingerContact& f) { return f.fingertip(); }));
}

namespace {

double track(double encoder, double setpoint, const MotorRates& rates, const MotorConfig& motor, double dt) {
  const double error = setpoint - encoder;
  const double limit = (error < 0.0 ? rates.close : rates.open) * dt;
  const double next = std::abs(error) <= limit ? setpoint : encoder + std::copysign(limit, error);
  return std::clamp(next, motor.encoder_min, motor.encoder_max);
}

double spool_of(double encoder, double reference, const MotorConfig& motor) {
  return std::max(0.0, encoders_to_spool(encoder, reference, motor));
}

void refresh_derived(const HandConfig& config, const ObjectShape& objects, HandState& s) {
  const MotorConfig& m = config.motor;
  const double sd = spool_of(s.motors.agonist, m.agonist_reference, m);
  const double sa = spool_of(s.motors.antagonist, m.antagonist_reference, m);
  std::array<double, kFingerCount> ag_limits{};
  std::array<double, kFingerCount> an_limits{};
  for (std::size_t i = 0; i < kFingerCount; ++i) {
    ag_limits[i] = finger::agonist_length(config.fingers[i], s.joints[i]);
    an_limits[i] = finger::antagonist_length(config.fingers[i], s.joints[i]);
    s.contacts.fingers[i] = contact_detect(config.fingers[i], s.joints[i], objects.per_finger[i],
                                           objects.skin_offset, config.pad_thickness);
  }
  s.agonist = distribute(sd, ag_limits);
  s.antagonist = distribute(sa, an_limits);
  s.contacts.fingertip_contact_count = count_fingertip_contacts(s.contacts);
}

}  // namespace

HandState initial_state(const HandConfig& config) {
  HandState s;
  s.motors.agonist = config.motor.agonist_reference;
  s.motors.antagonist = config.motor.antagonist_reference;
  s.motors.setpoints = {s.motors.agonist, s.motors.antagonist};
  refresh_derived(config, ObjectShape{}, s);
  return s;
}

HandState step_hand(const HandConfig& config, const HandState& state, MotorSetpoints setpoints,
                    const ObjectShape& objects, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const MotorConfig& m = config.motor;
  HandState next = state;
  next.time = state.time + dt;
  next.motors.setpoints = setpoints;
  next.motors.agonist = track(state.motors.agonist, setpoints.agonist, m.agonist, m, dt);
  next.motors.antagonist = track(state.motors.antagonist, setpoints.antagonist, m.antagonist, m, dt);

  const double sd0 = spool_of(state.motors.agonist, m.agonist_reference, m);
  const double sa0 = spool_of(state.motors.antagonist, m.antagonist_reference, m);
  const double sd1 = spool_of(next.motors.agonist, m.agonist_reference, m);
  const double sa1 = spool_of(next.motors.antagonist, m.antagonist_reference, m);

  // The sub-step count depends only on spool motion so fingers stay decoupled.
  double min_radius = config.fingers[0].pulley_radius;
  for (const auto& f : config.fingers) min_radius = std::min(min_radius, f.pulley_radius);
  const double travel = std::max(std::abs(sd1 - sd0), std::abs(sa1 - sa0));
  const int substeps =
      std::clamp(static_cast<int>(std::ceil(travel / (min_radius * config.max_substep_angle))), 1, 4000);

  for (std::size_t i = 0; i < kFingerCount; ++i) {
    const FingerConfig& fc = config.fingers[i];
    const auto& obstacle = objects.per_finger[i];
    JointState joints = state.joints[i];
    if (!obstacle) {
      joints = finger::step_finger(fc, joints, {sd1, sa1});
    } else {
      for (int k = 1; k <= substeps; ++k) {
        const double t = static_cast<double>(k) / substeps;
        const finger::TendonCommand cmd{sd0 + t * (sd1 - sd0), sa0 + t * (sa1 - sa0)};
        const FingerContact c = contact_detect(fc, joints, obstacle, objects.skin_offset, config.pad_thickness);
        joints = finger::step_finger(fc, joints, cmd, c.blocked);
      }
    }
    next.joints[i] = joints;
  }

  refresh_derived(config, objects, next);
  return next;
}

}  // namespace softhand::hand
