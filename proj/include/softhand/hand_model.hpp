#pragma once

// Five D-type fingers driven by two motors through two soft-synergy
// differentials (one per tendon system), with per-finger planar obstacles.

#include <array>
#include <optional>
#include <span>
#include <variant>

#include "softhand/finger_model.hpp"
#include "softhand/geometry.hpp"

namespace softhand::hand {

inline constexpr std::size_t kFingerCount = 5;

// Thumb, index, middle, ring, little.
std::string_view finger_name(std::size_t index);

// Where a finger plane sits on the palm; used only when reporting palm-frame
// coordinates. The thumb is mirrored.
struct FingerPlacement {
  Point2 base;
  double yaw = 0.0;
  bool mirrored = false;
};

struct MotorRates {
  double close = 0.0;  // counts/s while the encoder decreases
  double open = 0.0;   // counts/s while the encoder increases
};

struct MotorConfig {
  double agonist_reference = 700.0;
  double antagonist_reference = 820.0;
  double encoder_min = 0.0;
  double encoder_max = 1023.0;
  double spool_gain = 0.05;  // mm of tendon per count
  // Full open/closed strokes take 0.46 s to close and 0.59 s to open.
  MotorRates agonist{500.0 / 0.46, 500.0 / 0.59};
  MotorRates antagonist{600.0 / 0.46, 600.0 / 0.59};
};

struct HandConfig {
  std::array<finger::FingerConfig, kFingerCount> fingers{};
  std::array<FingerPlacement, kFingerCount> placement{{
      {{-30.0, -60.0}, 0.9, true},
      {{-33.0, 0.0}, 0.0, false},
      {{-11.0, 0.0}, 0.0, false},
      {{11.0, 0.0}, 0.0, false},
      {{33.0, 0.0}, 0.0, false},
  }};
  double synergy_stiffness = 0.5;  // N/mm
  MotorConfig motor;
  // Compliant tactile skin beyond the rigid clearance, mm.
  double pad_thickness = 2.0;
  // Largest joint-space motion per contact sub-step, rad.
  double max_substep_angle = 0.002;

  void validate() const;
};

struct MotorSetpoints {
  double agonist = 0.0;
  double antagonist = 0.0;
  friend bool operator==(const MotorSetpoints&, const MotorSetpoints&) = default;
};

struct MotorState {
  double agonist = 700.0;
  double antagonist = 820.0;
  MotorSetpoints setpoints{700.0, 820.0};
};

// One tendon system: common spool travel s split over five finger tendons.
// s == displacement[i] + extension[i] for every finger.
struct DifferentialState {
  double spool = 0.0;
  std::array<double, kFingerCount> displacement{};
  std::array<double, kFingerCount> extension{};
};

using Obstacle = std::variant<Circle, Polygon>;

struct ObjectShape {
  std::array<std::optional<Obstacle>, kFingerCount> per_finger{};
  double skin_offset = 0.5;  // mm; rigid clearance at which joints block

  // Throws std::invalid_argument for non-convex polygons or radius <= 0.
  void validate() const;
};

struct PhalanxContact {
  double clearance = 0.0;  // signed gap between phalanx and obstacle
  double penetration = 0.0;
  Point2 point;
  bool touching = false;
};

struct FingerContact {
  finger::JointMask blocked;
  std::array<PhalanxContact, finger::kJointCount> phalanges{};
  int deepest = -1;  // phalanx index with the largest penetration, -1 if none
  Point2 point;
  double penetration = 0.0;

  bool touching() const { return deepest >= 0; }
  bool fingertip() const { return phalanges[2].touching; }
};

struct ContactReport {
  std::array<FingerContact, kFingerCount> fingers{};
  int fingertip_contact_count = 0;
};

struct HandState {
  double time = 0.0;
  MotorState motors;
  std::array<finger::JointState, kFingerCount> joints{};
  DifferentialState agonist;
  DifferentialState antagonist;
  ContactReport contacts;
};

HandConfig default_hand_config();

// s = gain * (reference - encoder); decreasing encoder pulls tendon in.
// Throws std::out_of_range outside [encoder_min, encoder_max].
double encoders_to_spool(double encoder, double reference, const MotorConfig& motor);
double spool_to_encoder(double spool, double reference, const MotorConfig& motor);

DifferentialState distribute(double spool, std::span<const double, kFingerCount> limits);

// A joint is blocked when any phalanx distal to it lies within skin_offset of
// the obstacle. A phalanx touches while inside the pad (skin_offset plus
// pad_thickness); penetration is measured into the pad.
FingerContact contact_detect(const finger::FingerConfig& config, const finger::JointState& joints,
                             const std::optional<Obstacle>& obstacle, double skin_offset,
                             double pad_thickness);

int count_fingertip_contacts(const ContactReport& report);

HandState initial_state(const HandConfig& config);

// Rate-limited encoder tracking, spool update, differential split and
// per-finger quasi-static stepping with contact sub-steps.
HandState step_hand(const HandConfig& config, const HandState& state, MotorSetpoints setpoints,
                    const ObjectShape& objects, double dt);

}  // namespace softhand::hand
