#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "softhand/experiments.hpp"
#include "softhand/simulation.hpp"

using namespace softhand;
using namespace softhand::harness;

namespace {

Scenario grasp_scenario(double duration) {
  Scenario s;
  s.duration = duration;
  s.control.mode = ControlMode::profile;
  s.control.profile = {"cycle",
                       {{0.0, {700, 820}, {}},
                        {2.0, {200, 220}, {}},
                        {4.0, {200, 220}, {}},
                        {6.0, {450, 820}, {}},
                        {8.0, {700, 820}, {}},
                        {10.0, {300, 500}, {}}}};
  return s;
}

}  // namespace

TEST_CASE("blocking one finger leaves the others untouched") {
  const Scenario free = grasp_scenario(12.0);
  Scenario blocked = free;
  blocked.objects.per_finger[1] = Circle{{-30.0, 40.0}, 15.0};
  const auto a = simulate(free);
  const auto b = simulate(blocked);
  REQUIRE(a.size() == b.size());
  bool index_differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i : {0u, 2u, 3u, 4u}) CHECK(a[k].joints[i] == b[k].joints[i]);
    index_differs = index_differs || !(a[k].joints[1] == b[k].joints[1]);
  }
  CHECK(index_differs);
}

TEST_CASE("differentials conserve spool travel every tick") {
  Scenario s = grasp_scenario(12.0);
  s.objects.per_finger[2] = Circle{{-30.0, 40.0}, 15.0};
  const double eps = std::numeric_limits<double>::epsilon();
  for (const auto& r : simulate(s)) {
    for (const auto* d : {&r.agonist, &r.antagonist}) {
      for (std::size_t i = 0; i < hand::kFingerCount; ++i) {
        CHECK(std::abs(d->spool - (d->displacement[i] + d->extension[i])) <= 4 * eps * d->spool);
        CHECK(d->extension[i] >= 0.0);
      }
    }
  }
}

TEST_CASE("telemetry is deterministic and well formed") {
  Scenario s = grasp_scenario(3.0);
  s.objects.per_finger[1] = Circle{{-52.95, 56.82}, 12.0};
  std::ostringstream a;
  std::ostringstream b;
  for (const auto& r : simulate(s)) a << telemetry_row(r) << '\n';
  for (const auto& r : simulate(s)) b << telemetry_row(r) << '\n';
  CHECK(a.str() == b.str());

  const auto columns = [](const std::string& line) { return std::count(line.begin(), line.end(), ',') + 1; };
  const auto first = simulate(s).front();
  CHECK(columns(telemetry_header()) == columns(telemetry_row(first)));
  CHECK(first.tick == 1);
  CHECK(first.time == doctest::Approx(0.02));
}

TEST_CASE("motor encoders respect the rate limit") {
  const auto records = simulate(grasp_scenario(10.0));
  const hand::MotorConfig m;
  double prev_a = m.agonist_reference;
  double prev_b = m.antagonist_reference;
  for (const auto& r : records) {
    const double lim_a = std::max(m.agonist.close, m.agonist.open) * 0.02;
    const double lim_b = std::max(m.antagonist.close, m.antagonist.open) * 0.02;
    CHECK(std::abs(r.agonist_encoder - prev_a) <= lim_a + 1e-9);
    CHECK(std::abs(r.antagonist_encoder - prev_b) <= lim_b + 1e-9);
    prev_a = r.agonist_encoder;
    prev_b = r.antagonist_encoder;
  }
}

TEST_CASE("dip compensation with middle phalanx contact only moves the DIP") {
  hand::HandConfig config = hand::default_hand_config();
  hand::HandConfig fast = config;
  fast.motor.agonist = fast.motor.antagonist = {1e9, 1e9};
  hand::ObjectShape objects;
  objects.per_finger[1] = Circle{{-17.19, 51.22}, 5.0};
  const control::MotorSetpoints sp{450.0, 550.0};
  hand::HandState s = hand::step_hand(fast, hand::initial_state(config), sp, objects, 10.0);
  const auto& c = s.contacts.fingers[1];
  REQUIRE(c.phalanges[1].touching);
  REQUIRE_FALSE(c.phalanges[2].touching);
  CHECK(c.blocked.to_ulong() == 0b011);

  const auto before = s.joints[1];
  const auto next = control::dip_compensation(sp, 25.0);
  for (int k = 0; k < 5; ++k) s = hand::step_hand(config, s, next, objects, 0.02);
  CHECK(s.joints[1].theta[0] == before.theta[0]);
  CHECK(s.joints[1].theta[1] == before.theta[1]);
  CHECK(s.joints[1].theta[2] > before.theta[2] + 0.1);
}

TEST_CASE("induced slip moves the contact and trips slip detection") {
  Scenario s;
  s.duration = 9.0;
  s.objects.per_finger[0] = Circle{{-52.95, 56.82}, 12.0};
  s.control.gesture = {{0.0, 180}, {0.5, 180}, {2.0, 115}, {5.0, 100}, {9.0, 100}};
  s.disturbances = {{7.0, DisturbanceType::induced_slip, 6.0, 0.1, 0}};
  bool slipped = false;
  std::string last_mode;
  for (const auto& r : simulate(s)) {
    if (r.time > 7.0 && r.time < 7.2) slipped = slipped || r.sensing[0].is_slip;
    last_mode = r.mode;
  }
  CHECK(slipped);
  CHECK(last_mode == "CONTACT_HOLD");
}

TEST_CASE("live closure overrides the gesture trace") {
  Scenario s;
  s.control.live = true;
  Simulation sim(s);
  sim.set_closure(90.0);
  sim.step();
  CHECK(sim.record().setpoints == control::map_gesture(90.0));
  CHECK_THROWS_AS(sim.set_closure(std::nan("")), std::invalid_argument);
  Disturbance d;
  d.finger = 7;
  CHECK_THROWS_AS(sim.inject(d), std::invalid_argument);
}
