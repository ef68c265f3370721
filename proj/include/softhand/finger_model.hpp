#pragma once

// Planar kinematics and quasi-static tendon resolution for one three-joint
// dual-tendon finger. Lengths are in mm, angles in rad. Joints are indexed
// proximal to distal: MCP, PIP, DIP.

#include <array>
#include <bitset>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "softhand/geometry.hpp"

namespace softhand::finger {

inline constexpr std::size_t kJointCount = 3;

enum class Joint : std::uint8_t { MCP = 0, PIP = 1, DIP = 2 };

// Where the antagonist tendon terminates: fingertip (A), first middle
// phalanx (D) or second middle phalanx (P).
enum class FingerType : std::uint8_t { A, D, P };

using JointMask = std::bitset<kJointCount>;

std::string_view to_string(FingerType type);
FingerType finger_type_from_string(std::string_view name);

// Joints spanned by the antagonist tendon.
JointMask covered_joints(FingerType type);

struct FingerConfig {
  std::array<double, kJointCount> link_lengths{45.0, 35.0, 35.0};
  double pulley_radius = 5.0;
  std::array<double, kJointCount> joint_max{std::numbers::pi / 2, std::numbers::pi / 2,
                                             std::numbers::pi / 2};
  FingerType type = FingerType::D;
  // N*mm/rad; only meaningful for joints the antagonist does not cover.
  std::array<double, kJointCount> band_stiffness{20.0, 20.0, 20.0};
  double stall_torque = 400.0;  // N*mm
  std::array<Joint, kJointCount> flexion_priority{Joint::MCP, Joint::PIP, Joint::DIP};

  double total_length() const { return link_lengths[0] + link_lengths[1] + link_lengths[2]; }
  // Tendon travel that flexes every joint to its limit.
  double full_stroke() const;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

struct JointState {
  std::array<double, kJointCount> theta{};
  // Elastic band stretch per uncovered joint, rad-equivalent; zero for
  // covered joints.
  std::array<double, kJointCount> band_extension{};

  double total() const { return theta[0] + theta[1] + theta[2]; }
  friend bool operator==(const JointState&, const JointState&) = default;
};

// Absolute tendon displacements since the rest reference.
struct TendonCommand {
  double agonist = 0.0;     // pulled in, mm
  double antagonist = 0.0;  // slack released, mm
};

struct FingertipPose {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
};

// Base (MCP), PIP, DIP and fingertip positions in the finger plane.
using JointPositions = std::array<Point2, kJointCount + 1>;

// Base at the origin, extended finger along +x, flexion towards +y.
// Throws std::invalid_argument when a joint is outside its limits.
FingertipPose forward_kinematics(const FingerConfig& config, const JointState& joints);
JointPositions joint_positions(const FingerConfig& config, const JointState& joints);

double agonist_length(const FingerConfig& config, const JointState& joints);
double antagonist_length(const FingerConfig& config, const JointState& joints);

// Quasi-static resolution of a tendon command.
//
// The agonist budget cmd.agonist / r is spent in flexion-priority order:
// first on covered joints, which together may not exceed the antagonist slack
// cmd.antagonist / r, then on uncovered joints against their elastic bands.
// Joints in `blocked` cannot flex past their value in `state` but may extend.
// When the band torque the agonist works against exceeds the antagonist
// stall torque, the slack constraint yields.
JointState step_finger(const FingerConfig& config, const JointState& state, const TendonCommand& cmd,
                       JointMask blocked = {});

// Monte Carlo workspace: `n` uniform (agonist, antagonist) pairs in
// [0, stroke]^2 applied from rest. A negative stroke means full_stroke().
std::vector<Point2> workspace_sample(const FingerConfig& config, std::size_t n, std::uint64_t seed,
                                     double stroke = -1.0);

}  // namespace softhand::finger
