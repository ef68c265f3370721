#include "softhand/controller.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace softhand::control {

MotorSetpoints map_gesture(double angle_deg, const GestureMap& map) {
  const double a = std::clamp(angle_deg, map.closed_angle, map.open_angle);
  const double t = (a - map.closed_angle) / (map.open_angle - map.closed_angle);
  return {map.closed.agonist + t * (map.open.agonist - map.closed.agonist),
          map.closed.antagonist + t * (map.open.antagonist - map.closed.antagonist)};
}

double pid_step(const PidGains& gains, double setpoint, double measured, double dt, PidState& state) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double error = setpoint - measured;
  state.integral = std::clamp(state.integral + error * dt, -gains.integral_limit, gains.integral_limit);
  const double derivative = state.primed ? (error - state.prev_error) / dt : 0.0;
  state.prev_error = error;
  state.primed = true;
  const double u = gains.kp * error + gains.ki * state.integral + gains.kd * derivative;
  return std::clamp(u, -gains.output_limit, gains.output_limit);
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::SYNC: return "SYNC";
    case Mode::CONTACT_HOLD: return "CONTACT_HOLD";
    case Mode::SLIP_COMP: return "SLIP_COMP";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  if (name == "SYNC") return Mode::SYNC;
  if (name == "CONTACT_HOLD") return Mode::CONTACT_HOLD;
  if (name == "SLIP_COMP") return Mode::SLIP_COMP;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

MotorSetpoints dip_compensation(const MotorSetpoints& sp, double step, double saturation_differential) {
  if (!(step > 0.0)) throw std::invalid_argument("compensation step must be positive");
  const double floor = sp.antagonist - saturation_differential;
  return {std::min(sp.agonist, std::max(sp.agonist - step, floor)), sp.antagonist};
}

ControllerState fsm_step(const ControllerState& state, bool is_contact, bool is_slip, double angle_deg,
                         const FsmConfig& config) {
  ControllerState next = state;
  if (angle_deg > config.release_angle) {
    next.mode = Mode::SYNC;
    next.clear_ticks = 0;
    next.setpoints = map_gesture(angle_deg, config.map);
    return next;
  }
  const auto compensate = [&] {
    next.setpoints = dip_compensation(next.setpoints, config.dip_step, config.saturation_differential);
  };
  switch (state.mode) {
    case Mode::SYNC:
      if (is_contact) {
        next.mode = Mode::CONTACT_HOLD;  // keep the last commanded setpoints
      } else {
        next.setpoints = map_gesture(angle_deg, config.map);
      }
      break;
    case Mode::CONTACT_HOLD:
      if (is_slip) {
        next.mode = Mode::SLIP_COMP;
        next.clear_ticks = 0;
        compensate();
      }
      break;
    case Mode::SLIP_COMP:
      if (is_slip) {
        next.clear_ticks = 0;
        compensate();
      } else if (++next.clear_ticks >= config.slip_clear_ticks) {
        next.mode = Mode::CONTACT_HOLD;
        next.clear_ticks = 0;
      }
      break;
  }
  return next;
}

MotorSetpoints deformation_servo(double measured, const ServoGains& gains, double dt, PidState& state) {
  const double rate = pid_step(gains.pid, measured, gains.target, dt, state);
  return {rate * dt, rate * dt};
}

}  // namespace softhand::control
