#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "coilpilot/anchors.hpp"
#include "coilpilot/control.hpp"
#include "coilpilot/environment.hpp"
#include "coilpilot/kinematics.hpp"

namespace coilpilot {

struct EnvironmentConfig {
  environment::MotileTarget target;
  double contact_stiffness_n_per_mm = 0.1;
  environment::SensorModel sensor;
};

struct AnchorsConfig {
  anchors::AnchorSpec anchor;
  anchors::MediumModel ef30 = anchors::default_medium(anchors::Medium::kEf30);
  anchors::MediumModel tissue = anchors::default_medium(anchors::Medium::kTissue);
  anchors::DeploymentOptions deployment;
  anchors::TorqueSensorSpec torque_sensor;

  const anchors::MediumModel& medium(anchors::Medium m) const {
    return m == anchors::Medium::kEf30 ? ef30 : tissue;
  }
};

struct TrajectoryConfig {
  std::string annulus_file = "annulus15.json";
  int discretize_points = 500;
  double circle_radius_mm = 24.0;
  int circle_sites = 3;
  double standoff_mm = 10.0;
};

struct SessionConfig {
  // The control period (control.control_period_s) must be a whole number of steps.
  double step_s = 0.005;
  double broadcast_hz = 30.0;
  bool primed = true;
  kinematics::PressureVector initial_kpa = kinematics::PressureVector::Constant(20.0);
  int backbone_points = 21;
  // Wall seconds per simulated second is 1 / time_scale; 0 runs as fast as possible.
  double time_scale = 1.0;
  bool autostart = false;

  void validate() const;
};

struct MechanicsSweepConfig {
  std::string reference_file = "inflation_reference.csv";
  double p_min_kpa = 5.0;
  double curve_step_kpa = 1.0;
};

struct ContactTestConfig {
  double duration_s = 20.0;
  int evaluate_cycles = 10;
  // Distance from the deflated tip to the mean surface position along the approach axis.
  double surface_distance_mm = 30.0;
  double overtravel_mm = 6.3;
  double tilt_deg = 45.0;
};

struct PathTraceConfig {
  int workspace_samples_per_axis = 16;
  double workspace_tolerance_mm = 3.0;
};

struct OperatorConfig {
  double decision_period_s = 0.1;
  double settle_s = 0.3;  // wait after a jog before judging, on top of one motion cycle
  double jog_quantum_kpa = 0.5;
  double lateral_gain = 0.7;
  double lateral_tolerance_mm = 1.0;
  double advance_step_mm = 2.0;          // toward the surface before first touch
  double contact_advance_step_mm = 0.5;  // once the surface has been felt
  double sustained_force_n = 0.1;
  double rotate_force_n = 0.55;
  double rotate_step_rad = 1.0;
  double site_timeout_s = 60.0;
};

struct ImplantConfig {
  int rounds = 3;
  anchors::Medium medium = anchors::Medium::kEf30;
  double max_duration_s = 600.0;
  // When set, this NDJSON command log replaces the scripted operator.
  std::string command_file;
  OperatorConfig operator_model;
};

struct CalibrateTorqueConfig {
  int sessions = 1000;
  double torque_min_nmm = 0.5;
  double torque_max_nmm = 4.2;
  double torque_step_nmm = 0.1;
  double deploy_step_rad = 0.05;
  double deploy_force_n = 1.0;
};

struct ScenarioConfigs {
  MechanicsSweepConfig mechanics_sweep;
  ContactTestConfig contact_test;
  PathTraceConfig path_trace;
  ImplantConfig implant;
  CalibrateTorqueConfig calibrate_torque;
};

struct Config {
  std::uint64_t seed = 1;
  std::string data_dir;
  kinematics::ActuatorSpec actuator;
  control::ControllerConfig control;
  control::PlantConfig plant;
  EnvironmentConfig environment;
  AnchorsConfig anchors;
  TrajectoryConfig trajectory;
  SessionConfig session;
  ScenarioConfigs scenarios;

  // Validates every section; throws Error(kConfig / kInvalidSpec).
  void validate() const;
};

nlohmann::json to_json(const Config& cfg);

// Applies `patch` (JSON merge-patch) over the defaults. Unknown keys are rejected.
Config config_from_json(const nlohmann::json& patch);

// Empty path gives the defaults.
Config load_config(const std::string& path);

// Looks for `name` in cfg.data_dir, $COILPILOT_DATA_DIR, the source tree and the
// install prefix, in that order. Absolute paths are returned unchanged.
std::string resolve_data_path(const Config& cfg, const std::string& name);

}  // namespace coilpilot
