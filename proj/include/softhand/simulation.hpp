#pragma once

// Closed-loop scenario stepping: disturbances and object motion, contact,
// synthetic tactile frames, perception, control and the hand model, one
// tick at a time.

#include <array>
#include <string>
#include <vector>

#include "softhand/scenario.hpp"

namespace softhand::harness {

struct FingerSensing {
  bool touching = false;  // distal pad geometrically in contact
  bool is_contact = false;
  bool is_slip = false;
  Point2 center;
  double deformation = 0.0;
  double force = 0.0;
};

struct TickRecord {
  int tick = 0;
  double time = 0.0;
  std::string mode;
  control::MotorSetpoints setpoints;
  double agonist_encoder = 0.0;
  double antagonist_encoder = 0.0;
  double gesture = 180.0;
  std::array<finger::JointState, hand::kFingerCount> joints{};
  std::array<FingerSensing, hand::kFingerCount> sensing{};
  int fingertip_contacts = 0;
  double object_shift = 0.0;
  // Both differentials, for conservation checks.
  hand::DifferentialState agonist;
  hand::DifferentialState antagonist;
};

std::string telemetry_header();
std::string telemetry_row(const TickRecord& record);

class Simulation {
 public:
  // Throws std::invalid_argument for an invalid scenario.
  explicit Simulation(Scenario scenario);

  void step();
  bool finished() const { return tick_ >= total_ticks_; }
  int tick() const { return tick_; }
  double time() const { return tick_ * scenario_.dt; }

  // Live inputs. The closure angle replaces the gesture trace from now on;
  // injected disturbances start at the current tick.
  void set_closure(double angle_deg);
  void inject(Disturbance disturbance);

  const Scenario& scenario() const { return scenario_; }
  const hand::HandConfig& hand_config() const { return config_; }
  const hand::HandState& hand() const { return hand_; }
  const hand::ObjectShape& objects() const { return objects_; }
  const control::ControllerState& controller() const { return controller_; }
  const std::array<FingerSensing, hand::kFingerCount>& sensing() const { return sensing_; }
  const perception::FrameAnalysis& analysis(int finger) const { return *analysis_[finger]; }
  const perception::FrameAnalysis& baseline() const { return pipelines_[0].baseline(); }
  const tactile::Image& frame(int finger) const { return frames_[finger]; }
  const TickRecord& record() const { return record_; }

 private:
  struct ActiveMotion {
    int finger = 0;
    Point2 velocity;  // mm/s
    double until = 0.0;
  };

  void apply_disturbances(double t);
  void move_objects(double t);
  void sense();
  control::MotorSetpoints control_step(double t);
  void fill_record();

  Scenario scenario_;
  hand::HandConfig config_;
  hand::HandState hand_;
  hand::ObjectShape objects_;
  control::ControllerState controller_;
  control::PidState servo_pid_;
  control::MotorSetpoints servo_setpoints_;
  tactile::MarkerLayout layout_;
  std::vector<perception::TactilePipeline> pipelines_;
  std::array<const perception::FrameAnalysis*, hand::kFingerCount> analysis_{};
  std::array<tactile::Image, hand::kFingerCount> frames_{};
  std::array<perception::SlipState, hand::kFingerCount> slip_{};
  std::array<FingerSensing, hand::kFingerCount> sensing_{};
  std::vector<Disturbance> pending_;
  std::size_t next_disturbance_ = 0;
  std::vector<ActiveMotion> motions_;
  double pull_force_ = 0.0;
  double pull_until_ = 0.0;
  std::array<Point2, hand::kFingerCount> pull_direction_{};
  double object_shift_ = 0.0;
  bool live_closure_ = false;
  double closure_ = 180.0;
  double gesture_ = 180.0;
  int tick_ = 0;
  int total_ticks_ = 0;
  TickRecord record_;
};

}  // namespace softhand::harness
