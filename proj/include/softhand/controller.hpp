#pragma once

// Open-loop gesture mapping, PID, and the sync / contact-hold / slip
// compensation state machine driving the two motor setpoints.

#include <string_view>

#include "softhand/hand_model.hpp"

namespace softhand::control {

using hand::MotorSetpoints;

struct GestureMap {
  double closed_angle = 30.0;  // degrees
  double open_angle = 180.0;
  MotorSetpoints closed{200.0, 220.0};
  MotorSetpoints open{700.0, 820.0};
};

// Angle is clamped to [closed_angle, open_angle] before interpolation.
MotorSetpoints map_gesture(double angle_deg, const GestureMap& map = {});

struct PidGains {
  double kp = 10.0;
  double ki = 1.0;
  double kd = 0.0;
  double integral_limit = 200.0;
  double output_limit = 500.0 / 0.46;  // counts/s
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool primed = false;
};

// Returns the command for error = setpoint - measured; updates `state`.
// Throws std::invalid_argument for dt <= 0.
double pid_step(const PidGains& gains, double setpoint, double measured, double dt, PidState& state);

enum class Mode { SYNC, CONTACT_HOLD, SLIP_COMP };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct FsmConfig {
  GestureMap map;
  double release_angle = 170.0;
  int slip_clear_ticks = 5;
  double dip_step = 25.0;
  // Antagonist - agonist differential at which the DIP saturates.
  double saturation_differential = 500.0;
};

struct ControllerState {
  Mode mode = Mode::SYNC;
  MotorSetpoints setpoints{700.0, 820.0};
  int clear_ticks = 0;
};

// One controller tick. Gesture angles above release_angle always return to
// SYNC; otherwise contact freezes the setpoints and slip tightens the DIPs
// every tick until it has been clear for slip_clear_ticks.
ControllerState fsm_step(const ControllerState& state, bool is_contact, bool is_slip, double angle_deg,
                         const FsmConfig& config = {});

// Lowers the agonist setpoint by `step` with the antagonist held, never past
// antagonist - saturation_differential and never raising it.
// Throws std::invalid_argument for step <= 0.
MotorSetpoints dip_compensation(const MotorSetpoints& sp, double step, double saturation_differential = 500.0);

struct ServoGains {
  // Counts/s per unit deformation; tuned on the simulated indenter.
  PidGains pid{100.0, 60.0, 0.0, 1.0, 100.0};
  double target = 0.05;
};

// Setpoint increment for both motors this tick; positive opens the hand.
MotorSetpoints deformation_servo(double measured, const ServoGains& gains, double dt, PidState& state);

}  // namespace softhand::control
