#include "coilpilot/robot_sim.hpp"

#include <cmath>
#include <utility>

#include "coilpilot/error.hpp"

namespace coilpilot {

RobotSim::RobotSim(RobotSimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.actuator.validate();
  cfg_.plant.validate();
  cfg_.sensor.validate();
  if (cfg_.target) cfg_.target->validate();
  if (!(cfg_.step_s > 0.0)) throw Error(ErrorCode::kConfig, "step must be > 0");
  if (cfg_.plant.model == control::PlantModel::kPid) pid_.emplace(cfg_.plant);
  commanded_ = cfg_.initial_kpa;
  actual_ = cfg_.initial_kpa;
  const auto stroke = cfg_.primed ? mechanics::Stroke::kSettled : mechanics::Stroke::kFirst;
  strokes_ = {stroke, stroke, stroke};
  refresh_pose();
  sensor_sample_ = environment::sample_index_at(0.0, cfg_.sensor);
  measured_ = environment::sense_tip(tip_, cfg_.sensor, sensor_sample_);
}

void RobotSim::command(const kinematics::PressureVector& pressures) {
  commanded_ = pressures.cwiseMax(0.0).cwiseMin(cfg_.actuator.p_max_kpa);
}

void RobotSim::step() {
  const kinematics::PressureVector next =
      pid_ ? pid_->step(commanded_, actual_, cfg_.step_s)
           : control::plant_step(commanded_, actual_, cfg_.step_s, cfg_.plant);
  for (int i = 0; i < 3; ++i) {
    // The first stroke ends the first time the chamber deflates.
    if (next[i] < actual_[i]) strokes_[static_cast<std::size_t>(i)] = mechanics::Stroke::kSettled;
  }
  actual_ = next.cwiseMax(0.0);
  ++tick_;
  refresh_pose();
  const std::uint64_t sample = environment::sample_index_at(time_s(), cfg_.sensor);
  if (sample != sensor_sample_) {
    sensor_sample_ = sample;
    measured_ = environment::sense_tip(tip_, cfg_.sensor, sensor_sample_);
  }
}

void RobotSim::advance(double duration_s) {
  const auto steps = static_cast<std::int64_t>(std::llround(duration_s / cfg_.step_s));
  for (std::int64_t i = 0; i < steps; ++i) step();
}

Mat3 RobotSim::jacobian(const kinematics::PressureVector& pressures) const {
  return kinematics::pressure_jacobian(pressures, cfg_.actuator, strokes_);
}

std::optional<Plane> RobotSim::surface() const {
  if (!cfg_.target) return std::nullopt;
  return environment::target_pose_at(time_s(), *cfg_.target);
}

void RobotSim::refresh_pose() {
  arc_ = kinematics::arc_from_lengths(kinematics::chamber_lengths(actual_, cfg_.actuator, strokes_),
                                      cfg_.actuator);
  free_tip_ = kinematics::tip_from_arc(arc_);
  tip_ = free_tip_.position;
  contact_ = {};
  if (!cfg_.target) return;
  const Plane plane = environment::target_pose_at(time_s(), *cfg_.target);
  const environment::ContactResult c =
      environment::resolve_contact(free_tip_.position, free_tip_.tangent, plane,
                                   cfg_.contact_stiffness_n_per_mm, cfg_.target->surface_radius_mm,
                                   stick_point_);
  contact_ = c.state;
  tip_ = c.tip;
  if (!c.state.in_contact) {
    stick_point_.reset();
  } else if (!stick_point_) {
    stick_point_ = c.tip;
  }
}

}  // namespace coilpilot
