#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "softhand/finger_model.hpp"

using namespace softhand;
using namespace softhand::finger;

namespace {

FingerConfig config_of(FingerType t) {
  FingerConfig c;
  c.type = t;
  return c;
}

JointState js(double m, double p, double d) { return JointState{{m, p, d}, {}}; }

}  // namespace

TEST_CASE("finger types cover the expected joints") {
  CHECK(covered_joints(FingerType::A) == JointMask{0b111});
  CHECK(covered_joints(FingerType::D) == JointMask{0b011});
  CHECK(covered_joints(FingerType::P) == JointMask{0b001});
  CHECK(finger_type_from_string("P") == FingerType::P);
  CHECK_THROWS_AS(finger_type_from_string("Q"), std::invalid_argument);
}

TEST_CASE("config validation") {
  FingerConfig c;
  CHECK(c.total_length() == 115.0);
  CHECK_NOTHROW(c.validate());
  c.pulley_radius = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = FingerConfig{};
  c.flexion_priority = {Joint::MCP, Joint::MCP, Joint::DIP};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("forward kinematics") {
  const FingerConfig c;
  auto p = forward_kinematics(c, js(0, 0, 0));
  CHECK(p.x == doctest::Approx(115.0));
  CHECK(p.y == doctest::Approx(0.0));
  p = forward_kinematics(c, js(std::numbers::pi / 2, 0, 0));
  CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(115.0));
  CHECK(p.phi == doctest::Approx(std::numbers::pi / 2));

  // Complex-exponential chain sum, evaluated separately.
  p = forward_kinematics(c, js(0.3, 0.4, 0.5));
  CHECK(p.x == doctest::Approx(82.44213997229295).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(68.46739636193237).epsilon(1e-12));
  CHECK(p.phi == doctest::Approx(1.2));

  CHECK_THROWS_AS(forward_kinematics(c, js(-0.1, 0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(forward_kinematics(c, js(0, 0, 2.0)), std::invalid_argument);
}

TEST_CASE("forward kinematics Jacobian against finite differences") {
  const FingerConfig c;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.1, 1.4);
  for (int trial = 0; trial < 50; ++trial) {
    const JointState s = js(u(rng), u(rng), u(rng));
    for (std::size_t j = 0; j < kJointCount; ++j) {
      // Analytic column: sum over links k >= j of L_k * i * exp(i * phi_k).
      std::complex<double> col = 0.0;
      double phi = 0.0;
      for (std::size_t k = 0; k < kJointCount; ++k) {
        phi += s.theta[k];
        if (k >= j) col += c.link_lengths[k] * std::complex<double>(0, 1) * std::polar(1.0, phi);
      }
      const double h = 1e-6;
      JointState hi = s;
      JointState lo = s;
      hi.theta[j] += h;
      lo.theta[j] -= h;
      const auto a = forward_kinematics(c, hi);
      const auto b = forward_kinematics(c, lo);
      const double dx = (a.x - b.x) / (2 * h);
      const double dy = (a.y - b.y) / (2 * h);
      const double scale = std::abs(col);
      CHECK(std::abs(dx - col.real()) / scale < 1e-6);
      CHECK(std::abs(dy - col.imag()) / scale < 1e-6);
    }
  }
}

TEST_CASE("tendon lengths") {
  FingerConfig c;
  CHECK(agonist_length(c, js(0, 0, 0)) == 0.0);
  CHECK(agonist_length(c, js(0.1, 0.1, 0)) == doctest::Approx(1.0));
  CHECK(antagonist_length(config_of(FingerType::D), js(0.1, 0.1, 0.2)) == doctest::Approx(1.0));
  CHECK(antagonist_length(config_of(FingerType::A), js(0.1, 0.1, 0.2)) == doctest::Approx(2.0));
  CHECK(antagonist_length(config_of(FingerType::P), js(0.1, 0.1, 0.2)) == doctest::Approx(0.5));
}

TEST_CASE("agonist length is path independent") {
  const FingerConfig c;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const JointState target = js(u(rng), u(rng), u(rng));
    // Integrate r*dtheta joint by joint (a staircase path) with fine steps.
    double integral = 0.0;
    const int n = 1000;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      for (int k = 0; k < n; ++k) integral += c.pulley_radius * target.theta[j] / n;
    }
    CHECK(agonist_length(c, target) == doctest::Approx(integral).epsilon(1e-12));
  }
}

TEST_CASE("synchronised command keeps the DIP still") {
  const FingerConfig c = config_of(FingerType::D);
  const double r = c.pulley_radius;
  const JointState s = step_finger(c, {}, {r * 0.5, r * 0.5});
  CHECK(s.theta[0] + s.theta[1] == doctest::Approx(0.5));
  CHECK(s.theta[2] == 0.0);
  CHECK(step_finger(c, {}, {0.0, 0.0}) == JointState{});
}

TEST_CASE("extra agonist with antagonist held bends only the DIP") {
  const FingerConfig c = config_of(FingerType::D);
  const double r = c.pulley_radius;
  const JointState base = step_finger(c, {}, {r * 0.8, r * 0.8});
  for (double delta : {0.1, 0.5, 1.0, 3.0}) {
    const JointState s = step_finger(c, base, {r * 0.8 + delta, r * 0.8});
    CHECK(s.theta[0] == base.theta[0]);
    CHECK(s.theta[1] == base.theta[1]);
    CHECK(s.theta[2] == doctest::Approx(delta / r).epsilon(1e-12));
    CHECK(s.band_extension[2] == s.theta[2]);
  }
}

TEST_CASE("A-type cannot move under differential-only input") {
  const FingerConfig c = config_of(FingerType::A);
  const JointState s = step_finger(c, {}, {10.0, 0.0});
  CHECK(s == JointState{});
}

TEST_CASE("priority order and joint limits") {
  const FingerConfig c = config_of(FingerType::A);
  const double half = std::numbers::pi / 2;
  JointState s = step_finger(c, {}, {c.pulley_radius * 2.0, 100.0});
  CHECK(s.theta[0] == doctest::Approx(half));
  CHECK(s.theta[1] == doctest::Approx(2.0 - half));
  CHECK(s.theta[2] == 0.0);
  s = step_finger(c, {}, {1000.0, 1000.0});
  CHECK(s.total() == doctest::Approx(3 * half));
}

TEST_CASE("blocked joints hold but may extend") {
  const FingerConfig c = config_of(FingerType::A);
  const double r = c.pulley_radius;
  const JointState held = step_finger(c, {}, {r * 0.4, 100.0});
  JointState s = step_finger(c, held, {r * 1.0, 100.0}, JointMask{0b001});
  CHECK(s.theta[0] == held.theta[0]);
  CHECK(s.theta[1] == doctest::Approx(0.6));
  s = step_finger(c, held, {r * 0.1, 100.0}, JointMask{0b001});
  CHECK(s.theta[0] == doctest::Approx(0.1));
}

TEST_CASE("stall torque lets the antagonist yield") {
  FingerConfig c = config_of(FingerType::D);
  c.stall_torque = 10.0;
  const double r = c.pulley_radius;
  // Band torque 20 * 1.0 exceeds the stall, so covered joints take the budget.
  const JointState s = step_finger(c, {}, {r * 1.5, r * 0.5});
  CHECK(s.theta[0] == doctest::Approx(1.5));
  CHECK(s.theta[2] == 0.0);
}

TEST_CASE("monotone total angle and reversibility") {
  for (FingerType t : {FingerType::A, FingerType::D, FingerType::P}) {
    const FingerConfig c = config_of(t);
    double prev = -1.0;
    for (double d = 0.0; d <= c.full_stroke(); d += 0.25) {
      const JointState s = step_finger(c, {}, {d, 1000.0});
      CHECK(s.total() >= prev);
      prev = s.total();
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, c.full_stroke());
    for (int i = 0; i < 50; ++i) {
      const JointState s = step_finger(c, {}, {u(rng), u(rng)});
      CHECK(step_finger(c, s, {0.0, 0.0}) == JointState{});
    }
  }
}

TEST_CASE("workspace sampling") {
  const FingerConfig c = config_of(FingerType::D);
  const auto one = workspace_sample(c, 1, 42, 0.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].x == doctest::Approx(115.0));
  CHECK(one[0].y == doctest::Approx(0.0));
  CHECK(workspace_sample(c, 100, 9) == workspace_sample(c, 100, 9));
  CHECK(workspace_sample(c, 100, 9) != workspace_sample(c, 100, 10));
  CHECK_THROWS_AS(workspace_sample(c, 0, 1), std::invalid_argument);
}
