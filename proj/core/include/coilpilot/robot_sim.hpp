#pragma once

#include <cstdint>
#include <optional>

#include "coilpilot/control.hpp"
#include "coilpilot/environment.hpp"
#include "coilpilot/kinematics.hpp"

namespace coilpilot {

struct RobotSimConfig {
  kinematics::ActuatorSpec actuator;
  control::PlantConfig plant;
  environment::SensorModel sensor;
  double step_s = 0.005;
  // A primed robot has already finished the first inflation stroke of every chamber.
  bool primed = true;
  kinematics::PressureVector initial_kpa = kinematics::PressureVector::Constant(20.0);
  std::optional<environment::MotileTarget> target;
  double contact_stiffness_n_per_mm = 0.1;
};

// The simulated robot in its world: pressure plant, kinematics, optional
// motile contact surface and the EM tracker. Time advances in fixed steps.
class RobotSim final : public control::PlantHandle {
 public:
  explicit RobotSim(RobotSimConfig cfg);

  double time_s() const override { return static_cast<double>(tick_) * cfg_.step_s; }
  std::int64_t tick() const { return tick_; }
  double step_s() const { return cfg_.step_s; }

  kinematics::PressureVector actual_pressures() const override { return actual_; }
  const kinematics::PressureVector& commanded_pressures() const { return commanded_; }
  const kinematics::ChamberStrokes& strokes() const { return strokes_; }

  void command(const kinematics::PressureVector& pressures) override;
  void step();
  void advance(double duration_s) override;

  const kinematics::ArcState& arc() const { return arc_; }
  const kinematics::TipPose& free_tip() const { return free_tip_; }
  Vec3 true_tip() const override { return tip_; }
  Vec3 measured_tip() const override { return measured_; }
  std::uint64_t sensor_sample() const { return sensor_sample_; }
  Mat3 jacobian(const kinematics::PressureVector& pressures) const override;

  const environment::ContactState& contact() const { return contact_; }
  std::optional<Plane> surface() const;
  const RobotSimConfig& config() const { return cfg_; }

 private:
  void refresh_pose();

  RobotSimConfig cfg_;
  std::optional<control::PidPump> pid_;
  std::int64_t tick_ = 0;
  kinematics::PressureVector commanded_;
  kinematics::PressureVector actual_;
  kinematics::ChamberStrokes strokes_;
  kinematics::ArcState arc_;
  kinematics::TipPose free_tip_;
  Vec3 tip_ = Vec3::Zero();
  Vec3 measured_ = Vec3::Zero();
  std::uint64_t sensor_sample_ = 0;
  environment::ContactState contact_;
  std::optional<Vec3> stick_point_;
};

}  // namespace coilpilot
