#include "softhand/finger_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace softhand::finger {

std::string_view to_string(FingerType type) {
  switch (type) {
    case FingerType::A: return "A";
    case FingerType::D: return "D";
    case FingerType::P: return "P";
  }
  return "?";
}

FingerType finger_type_from_string(std::string_view name) {
  if (name == "A") return FingerType::A;
  if (name == "D") return FingerType::D;
  if (name == "P") return FingerType::P;
  throw std::invalid_argument("unknown finger type '" + std::string(name) + "'");
}

JointMask covered_joints(FingerType type) {
  switch (type) {
    case FingerType::A: return JointMask{0b111};
    case FingerType::D: return JointMask{0b011};
    case FingerType::P: return JointMask{0b001};
  }
  return {};
}

double FingerConfig::full_stroke() const {
  return pulley_radius * (joint_max[0] + joint_max[1] + joint_max[2]);
}

void FingerConfig::validate() const {
  for (double l : link_lengths) {
    if (!(l > 0.0)) throw std::invalid_argument("link lengths must be positive");
  }
  if (!(pulley_radius > 0.0)) throw std::invalid_argument("pulley radius must be positive");
  for (double m : joint_max) {
    if (!(m > 0.0 && m <= std::numbers::pi)) throw std::invalid_argument("joint limit must lie in (0, pi]");
  }
  for (double k : band_stiffness) {
    if (!(k >= 0.0)) throw std::invalid_argument("band stiffness must be non-negative");
  }
  if (!(stall_torque > 0.0)) throw std::invalid_argument("stall torque must be positive");
  JointMask seen;
  for (Joint j : flexion_priority) seen.set(static_cast<std::size_t>(j));
  if (!seen.all()) throw std::invalid_argument("flexion priority must list each joint once");
}

namespace {

void check_limits(const FingerConfig& config, const JointState& joints) {
  for (std::size_t j = 0; j < kJointCount; ++j) {
    const double t = joints.theta[j];
    if (!(t >= 0.0 && t <= config.joint_max[j])) {
      throw std::invalid_argument("joint " + std::to_string(j) + " outside [0, limit]: " + std::to_string(t));
    }
  }
}

// Greedy priority fill of `budget` over the joints selected by `group`, with
// an optional joint-sum cap for that group. Returns the unspent budget.
double fill(const FingerConfig& config, JointMask group, const std::array<double, kJointCount>& caps,
            double budget, double group_cap, std::array<double, kJointCount>& theta) {
  for (Joint jn : config.flexion_priority) {
    const auto j = static_cast<std::size_t>(jn);
    if (!group.test(j)) continue;
    const double take = std::max(0.0, std::min({caps[j], budget, group_cap}));
    theta[j] = take;
    budget -= take;
    group_cap -= take;
  }
  return budget;
}

}  // namespace

JointPositions joint_positions(const FingerConfig& config, const JointState& joints) {
  JointPositions p{};
  double angle = 0.0;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    angle += joints.theta[j];
    p[j + 1] = p[j] + config.link_lengths[j] * Point2{std::cos(angle), std::sin(angle)};
  }
  return p;
}

FingertipPose forward_kinematics(const FingerConfig& config, const JointState& joints) {
  check_limits(config, joints);
  const JointPositions p = joint_positions(config, joints);
  return {p[3].x, p[3].y, joints.total()};
}

double agonist_length(const FingerConfig& config, const JointState& joints) {
  return config.pulley_radius * joints.total();
}

double antagonist_length(const FingerConfig& config, const JointState& joints) {
  const JointMask covered = covered_joints(config.type);
  double sum = 0.0;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    if (covered.test(j)) sum += joints.theta[j];
  }
  return config.pulley_radius * sum;
}

JointState step_finger(const FingerConfig& config, const JointState& state, const TendonCommand& cmd,
                       JointMask blocked) {
  const double r = config.pulley_radius;
  const double budget = std::max(0.0, cmd.agonist) / r;
  const double slack = std::max(0.0, cmd.antagonist) / r;

  std::array<double, kJointCount> caps{};
  for (std::size_t j = 0; j < kJointCount; ++j) {
    caps[j] = blocked.test(j) ? std::clamp(state.theta[j], 0.0, config.joint_max[j]) : config.joint_max[j];
  }

  const JointMask covered = covered_joints(config.type);
  const JointMask uncovered = ~covered;
  const auto resolve = [&](double covered_cap) {
    std::array<double, kJointCount> theta{};
    const double rest = fill(config, covered, caps, budget, covered_cap, theta);
    fill(config, uncovered, caps, rest, std::numeric_limits<double>::infinity(), theta);
    return theta;
  };

  std::array<double, kJointCount> theta = resolve(slack);

  // Agonist tension balances the stretched bands; the covered joints pass the
  // same tension to the antagonist motor.
  double band_torque = 0.0;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    if (uncovered.test(j)) band_torque += config.band_stiffness[j] * theta[j];
  }
  if (band_torque > config.stall_torque) theta = resolve(std::numeric_limits<double>::infinity());

  JointState next;
  next.theta = theta;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    next.band_extension[j] = uncovered.test(j) ? theta[j] : 0.0;
  }
  return next;
}

std::vector<Point2> workspace_sample(const FingerConfig& config, std::size_t n, std::uint64_t seed,
                                     double stroke) {
  if (n == 0) throw std::invalid_argument("workspace_sample needs n >= 1");
  if (stroke < 0.0) stroke = config.full_stroke();
  std::mt19937_64 rng(seed);
  std::vector<Point2> points;
  points.reserve(n);
  const JointState rest{};
  for (std::size_t i = 0; i < n; ++i) {
    // 53-bit mantissa draws keep the stream identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const JointState js = step_finger(config, rest, {u * stroke, v * stroke});
    const FingertipPose pose = forward_kinematics(config, js);
    points.push_back({pose.x, pose.y});
  }
  return points;
}

}  // namespace softhand::finger
