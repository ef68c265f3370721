#pragma once

// Scenario files: hand and object setup, control inputs, disturbance
// schedule and experiment-specific sweeps. Stored as JSON.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softhand/controller.hpp"
#include "softhand/hand_model.hpp"
#include "softhand/perception.hpp"
#include "softhand/tactile_sim.hpp"

namespace softhand::harness {

enum class DisturbanceType { indenter_move, object_force, induced_slip };

std::string_view to_string(DisturbanceType type);
DisturbanceType disturbance_type_from_string(std::string_view name);

// indenter_move: shift the indenter by `magnitude` mm along its push direction.
// object_force: pull the object with `magnitude` N for `duration` s (0 = to
//   the end of the run).
// induced_slip: drag the obstacle of `finger` `magnitude` mm along its distal
//   phalanx over `duration` s.
struct Disturbance {
  double time = 0.0;
  DisturbanceType type = DisturbanceType::indenter_move;
  double magnitude = 0.0;
  double duration = 0.0;
  int finger = 1;
};

struct GesturePoint {
  double t = 0.0;
  double angle = 180.0;  // degrees
};

struct ProfilePoint {
  double t = 0.0;
  control::MotorSetpoints setpoints;
  // Antagonist stall torque from this point on; unset keeps the configured one.
  std::optional<double> antagonist_stall;
};

struct MotorProfile {
  std::string name;
  std::vector<ProfilePoint> points;
};

struct NamedObject {
  std::string name;
  hand::ObjectShape shape;
};

enum class ControlMode { profile, teleop, servo };

std::string_view to_string(ControlMode mode);
ControlMode control_mode_from_string(std::string_view name);

struct ControlConfig {
  ControlMode mode = ControlMode::teleop;
  // Teleop: slip and contact reach the state machine only with feedback on.
  bool feedback = true;
  bool live = false;
  bool synthetic_gesture = true;
  std::vector<GesturePoint> gesture;
  MotorProfile profile;
  std::optional<control::MotorSetpoints> initial_setpoints;
  control::FsmConfig fsm;
  control::ServoGains servo;
  int focus_finger = 1;
};

// Friction model for an object held between the pads. A pull that beats
// friction slides every finger's obstacle along that finger's distal phalanx.
struct ObjectMotion {
  double friction = 0.5;
  double pad_stiffness = 4.0;  // N/mm of pad penetration
  double slide_speed = 60.0;   // mm/s while the pull beats friction
};

struct IndenterConfig {
  int finger = 1;
  Point2 direction{0.0, -1.0};  // push direction in the finger plane
};

struct Scenario {
  std::string name;
  std::string experiment;
  hand::HandConfig hand = hand::default_hand_config();
  hand::ObjectShape objects;
  std::vector<NamedObject> object_set;
  std::vector<MotorProfile> profiles;
  std::vector<finger::FingerType> finger_types{finger::FingerType::A, finger::FingerType::D,
                                               finger::FingerType::P};
  ControlConfig control;
  std::vector<Disturbance> disturbances;
  ObjectMotion motion;
  IndenterConfig indenter;
  perception::PerceptionConfig perception;
  tactile::SensorMapping mapping;
  double duration = 10.0;
  double dt = 0.02;
  std::uint64_t seed = 1;
  int workspace_samples = 10000;

  // Throws std::invalid_argument.
  void validate() const;
};

// Throws std::invalid_argument for malformed documents.
Scenario parse_scenario(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);

// Relative paths that do not exist are looked up in $SOFTHAND_CONFIG_DIR.
std::filesystem::path resolve_config_path(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

double gesture_at(const std::vector<GesturePoint>& trace, double t);
control::MotorSetpoints profile_at(const MotorProfile& profile, double t);
std::optional<double> profile_stall_at(const MotorProfile& profile, double t);

}  // namespace softhand::harness
