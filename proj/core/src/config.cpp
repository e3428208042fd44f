#include "coilpilot/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "coilpilot/error.hpp"

#ifndef COILPILOT_DEFAULT_DATA_DIR
#define COILPILOT_DEFAULT_DATA_DIR ""
#endif
#ifndef COILPILOT_SOURCE_DATA_DIR
#define COILPILOT_SOURCE_DATA_DIR ""
#endif

namespace coilpilot {

using nlohmann::json;

namespace {

// Each struct lists its fields once; the same visitor writes and reads.
template <class F> void fields(mechanics::BalloonSpec& s, F&& f) {
  f("radius_a_mm", s.radius_a_mm);
  f("thickness_h_mm", s.thickness_h_mm);
  f("youngs_e_n_per_mm2", s.youngs_e_n_per_mm2);
  f("correction_c", s.correction_c);
  f("stiction_pressure_kpa", s.stiction_pressure_kpa);
}
template <class F> void fields(mechanics::StackSpec& s, F&& f) {
  f("balloon", s.balloon);
  f("n_balloons", s.n_balloons);
  f("deflated_length_mm", s.deflated_length_mm);
}
template <class F> void fields(kinematics::ActuatorSpec& s, F&& f) {
  f("stacks", s.stacks);
  f("chamber_offset_mm", s.chamber_offset_mm);
  f("chamber_angles_rad", s.chamber_angles_rad);
  f("p_max_kpa", s.p_max_kpa);
}
template <class F> void fields(control::ControllerConfig& s, F&& f) {
  f("rate_k", s.rate_k);
  f("error_threshold_mm", s.error_threshold_mm);
  f("damping_lambda", s.damping_lambda);
  f("max_iterations_per_goal", s.max_iterations_per_goal);
  f("p_floor_kpa", s.p_floor_kpa);
  f("p_max_kpa", s.p_max_kpa);
  f("control_period_s", s.control_period_s);
  f("singular_threshold", s.singular_threshold);
  f("damping_boost", s.damping_boost);
}
template <class F> void fields(control::PidGains& s, F&& f) {
  f("kp", s.kp);
  f("ki", s.ki);
  f("kd", s.kd);
}
template <class F> void fields(control::PlantConfig& s, F&& f) {
  f("model", s.model);
  f("time_constant_s", s.time_constant_s);
  f("slew_limit_kpa_per_s", s.slew_limit_kpa_per_s);
  f("pid", s.pid);
}
template <class F> void fields(Plane& s, F&& f) {
  f("origin", s.origin);
  f("normal", s.normal);
}
template <class F> void fields(environment::AnchorSite& s, F&& f) {
  f("label", s.label);
  f("u_mm", s.uv.x());
  f("v_mm", s.uv.y());
}
template <class F> void fields(environment::MotileTarget& s, F&& f) {
  f("base_pose", s.base_pose);
  f("amplitude_mm", s.amplitude_mm);
  f("frequency_hz", s.frequency_hz);
  f("phase_rad", s.phase_rad);
  f("surface_radius_mm", s.surface_radius_mm);
  f("anchor_sites", s.anchor_sites);
}
template <class F> void fields(environment::SensorModel& s, F&& f) {
  f("position_noise_sigma_mm", s.position_noise_sigma_mm);
  f("quantization_mm", s.quantization_mm);
  f("sample_rate_hz", s.sample_rate_hz);
}
template <class F> void fields(EnvironmentConfig& s, F&& f) {
  f("target", s.target);
  f("contact_stiffness_n_per_mm", s.contact_stiffness_n_per_mm);
  f("sensor", s.sensor);
}
template <class F> void fields(anchors::AnchorSpec& s, F&& f) {
  f("coil_length_mm", s.coil_length_mm);
  f("coil_pitch_mm_per_rev", s.coil_pitch_mm_per_rev);
  f("head_length_mm", s.head_length_mm);
  f("target_depth_mm", s.target_depth_mm);
}
template <class F> void fields(anchors::MediumModel& s, F&& f) {
  f("preload_torque_nmm", s.preload_torque_nmm);
  f("insertion_torque_at_full_depth_nmm", s.insertion_torque_at_full_depth_nmm);
  f("release_ratio_eta", s.release_ratio_eta);
  f("head_contact_stiffness_nmm_per_rad", s.head_contact_stiffness_nmm_per_rad);
}
template <class F> void fields(anchors::DeploymentOptions& s, F&& f) {
  f("puncture_force_n", s.puncture_force_n);
  f("require_sustained_force", s.require_sustained_force);
}
template <class F> void fields(anchors::TorqueSensorSpec& s, F&& f) {
  f("flexure_stiffness_nmm_per_rad", s.flexure_stiffness_nmm_per_rad);
  f("magnet_gap_g0_mm", s.magnet_gap_g0_mm);
  f("lever_radius_mm", s.lever_radius_mm);
  f("field_coefficient", s.field_coefficient);
  f("min_gap_mm", s.min_gap_mm);
  f("resolution_nmm", s.resolution_nmm);
  f("calibration_error", s.calibration_error);
  f("calibration_max_torque_nmm", s.calibration_max_torque_nmm);
  f("calibration_points", s.calibration_points);
}
template <class F> void fields(AnchorsConfig& s, F&& f) {
  f("anchor", s.anchor);
  f("ef30", s.ef30);
  f("tissue", s.tissue);
  f("deployment", s.deployment);
  f("torque_sensor", s.torque_sensor);
}
template <class F> void fields(TrajectoryConfig& s, F&& f) {
  f("annulus_file", s.annulus_file);
  f("discretize_points", s.discretize_points);
  f("circle_radius_mm", s.circle_radius_mm);
  f("circle_sites", s.circle_sites);
  f("standoff_mm", s.standoff_mm);
}
template <class F> void fields(SessionConfig& s, F&& f) {
  f("step_s", s.step_s);
  f("broadcast_hz", s.broadcast_hz);
  f("primed", s.primed);
  f("initial_kpa", s.initial_kpa);
  f("backbone_points", s.backbone_points);
  f("time_scale", s.time_scale);
  f("autostart", s.autostart);
}
template <class F> void fields(MechanicsSweepConfig& s, F&& f) {
  f("reference_file", s.reference_file);
  f("p_min_kpa", s.p_min_kpa);
  f("curve_step_kpa", s.curve_step_kpa);
}
template <class F> void fields(ContactTestConfig& s, F&& f) {
  f("duration_s", s.duration_s);
  f("evaluate_cycles", s.evaluate_cycles);
  f("surface_distance_mm", s.surface_distance_mm);
  f("overtravel_mm", s.overtravel_mm);
  f("tilt_deg", s.tilt_deg);
}
template <class F> void fields(PathTraceConfig& s, F&& f) {
  f("workspace_samples_per_axis", s.workspace_samples_per_axis);
  f("workspace_tolerance_mm", s.workspace_tolerance_mm);
}
template <class F> void fields(OperatorConfig& s, F&& f) {
  f("decision_period_s", s.decision_period_s);
  f("settle_s", s.settle_s);
  f("jog_quantum_kpa", s.jog_quantum_kpa);
  f("lateral_gain", s.lateral_gain);
  f("lateral_tolerance_mm", s.lateral_tolerance_mm);
  f("advance_step_mm", s.advance_step_mm);
  f("contact_advance_step_mm", s.contact_advance_step_mm);
  f("sustained_force_n", s.sustained_force_n);
  f("rotate_force_n", s.rotate_force_n);
  f("rotate_step_rad", s.rotate_step_rad);
  f("site_timeout_s", s.site_timeout_s);
}
template <class F> void fields(ImplantConfig& s, F&& f) {
  f("rounds", s.rounds);
  f("medium", s.medium);
  f("max_duration_s", s.max_duration_s);
  f("command_file", s.command_file);
  f("operator", s.operator_model);
}
template <class F> void fields(CalibrateTorqueConfig& s, F&& f) {
  f("sessions", s.sessions);
  f("torque_min_nmm", s.torque_min_nmm);
  f("torque_max_nmm", s.torque_max_nmm);
  f("torque_step_nmm", s.torque_step_nmm);
  f("deploy_step_rad", s.deploy_step_rad);
  f("deploy_force_n", s.deploy_force_n);
}
template <class F> void fields(ScenarioConfigs& s, F&& f) {
  f("mechanics-sweep", s.mechanics_sweep);
  f("contact-test", s.contact_test);
  f("path-trace", s.path_trace);
  f("implant", s.implant);
  f("calibrate-torque", s.calibrate_torque);
}
template <class F> void fields(Config& s, F&& f) {
  f("seed", s.seed);
  f("data_dir", s.data_dir);
  f("actuator", s.actuator);
  f("control", s.control);
  f("plant", s.plant);
  f("environment", s.environment);
  f("anchors", s.anchors);
  f("trajectory", s.trajectory);
  f("session", s.session);
  f("scenarios", s.scenarios);
}

template <class T>
concept Visitable = requires(T& t) { fields(t, [](const char*, auto&) {}); };

json write(const double& v) { return v; }
json write(const int& v) { return v; }
json write(const bool& v) { return v; }
json write(const std::uint64_t& v) { return v; }
json write(const std::string& v) { return v; }
json write(const control::PlantModel& v) {
  return v == control::PlantModel::kPid ? "pid" : "first-order-lag";
}
json write(const anchors::Medium& v) { return std::string(anchors::to_string(v)); }
json write(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
template <class T, std::size_t N> json write(const std::array<T, N>& v);
template <class T> json write(const std::vector<T>& v);
template <Visitable T> json write(const T& v) {
  json out = json::object();
  fields(const_cast<T&>(v), [&](const char* key, auto& member) { out[key] = write(member); });
  return out;
}
template <class T, std::size_t N> json write(const std::array<T, N>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(write(e));
  return out;
}
template <class T> json write(const std::vector<T>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(write(e));
  return out;
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kConfig, where + ": " + what);
}

void read(const json& j, double& v, const std::string& at) {
  if (!j.is_number()) bad(at, "expected a number");
  v = j.get<double>();
}
void read(const json& j, int& v, const std::string& at) {
  if (!j.is_number_integer()) bad(at, "expected an integer");
  v = j.get<int>();
}
void read(const json& j, bool& v, const std::string& at) {
  if (!j.is_boolean()) bad(at, "expected true or false");
  v = j.get<bool>();
}
void read(const json& j, std::uint64_t& v, const std::string& at) {
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    bad(at, "expected a non-negative integer");
  }
  v = j.get<std::uint64_t>();
}
void read(const json& j, std::string& v, const std::string& at) {
  if (!j.is_string()) bad(at, "expected a string");
  v = j.get<std::string>();
}
void read(const json& j, control::PlantModel& v, const std::string& at) {
  std::string name;
  read(j, name, at);
  if (name == "pid") v = control::PlantModel::kPid;
  else if (name == "first-order-lag") v = control::PlantModel::kFirstOrderLag;
  else bad(at, "expected \"first-order-lag\" or \"pid\"");
}
void read(const json& j, anchors::Medium& v, const std::string& at) {
  std::string name;
  read(j, name, at);
  v = anchors::medium_from_string(name);
}
void read(const json& j, Eigen::Vector3d& v, const std::string& at) {
  if (!j.is_array() || j.size() != 3) bad(at, "expected [x, y, z]");
  for (int i = 0; i < 3; ++i) read(j[static_cast<std::size_t>(i)], v[i], at);
}
template <class T, std::size_t N> void read(const json& j, std::array<T, N>& v, const std::string& at);
template <class T> void read(const json& j, std::vector<T>& v, const std::string& at);
template <Visitable T> void read(const json& j, T& v, const std::string& at) {
  if (!j.is_object()) bad(at, "expected an object");
  std::size_t seen = 0;
  fields(v, [&](const char* key, auto& member) {
    const std::string path = at.empty() ? key : at + "." + key;
    if (j.contains(key)) {
      read(j.at(key), member, path);
      ++seen;
    }
  });
  if (seen != j.size()) {
    json known = write(v);
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) bad(at.empty() ? key : at + "." + key, "unknown key");
    }
  }
}
template <class T, std::size_t N> void read(const json& j, std::array<T, N>& v, const std::string& at) {
  if (!j.is_array() || j.size() != N) bad(at, "expected an array of " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) read(j[i], v[i], at + "[" + std::to_string(i) + "]");
}
template <class T> void read(const json& j, std::vector<T>& v, const std::string& at) {
  if (!j.is_array()) bad(at, "expected an array");
  v.assign(j.size(), T{});
  for (std::size_t i = 0; i < j.size(); ++i) read(j[i], v[i], at + "[" + std::to_string(i) + "]");
}

}  // namespace

void SessionConfig::validate() const {
  if (!(step_s > 0.0)) throw Error(ErrorCode::kConfig, "session.step_s must be > 0");
  if (!(broadcast_hz > 0.0)) throw Error(ErrorCode::kConfig, "session.broadcast_hz must be > 0");
  if (!(time_scale >= 0.0)) throw Error(ErrorCode::kConfig, "session.time_scale must be >= 0");
  if (backbone_points < 2) throw Error(ErrorCode::kConfig, "session.backbone_points must be >= 2");
}

void Config::validate() const {
  actuator.validate();
  control.validate();
  plant.validate();
  environment.target.validate();
  environment.sensor.validate();
  if (!(environment.contact_stiffness_n_per_mm > 0.0)) {
    throw Error(ErrorCode::kConfig, "environment.contact_stiffness_n_per_mm must be > 0");
  }
  anchors.anchor.validate();
  anchors.ef30.validate();
  anchors.tissue.validate();
  anchors.torque_sensor.validate();
  session.validate();
  const double ratio = control.control_period_s / session.step_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
    throw Error(ErrorCode::kConfig, "control.control_period_s must be a multiple of session.step_s");
  }
  if (trajectory.discretize_points < 2 || trajectory.circle_sites < 1 ||
      !(trajectory.circle_radius_mm > 0.0) || !(trajectory.standoff_mm >= 0.0)) {
    throw Error(ErrorCode::kConfig, "trajectory section out of range");
  }
  if (scenarios.implant.rounds < 1 || scenarios.calibrate_torque.sessions < 1 ||
      scenarios.contact_test.evaluate_cycles < 1) {
    throw Error(ErrorCode::kConfig, "scenario counts must be >= 1");
  }
}

json to_json(const Config& cfg) { return write(cfg); }

Config config_from_json(const json& patch) {
  if (!patch.is_null() && !patch.is_object()) {
    throw Error(ErrorCode::kConfig, "config must be a JSON object");
  }
  json merged = to_json(Config{});
  if (patch.is_object()) merged.merge_patch(patch);
  Config cfg;
  read(merged, cfg, "");
  cfg.environment.sensor.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

Config load_config(const std::string& path) {
  if (path.empty()) return config_from_json(json::object());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  json patch;
  try {
    in >> patch;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
  return config_from_json(patch);
}

std::string resolve_data_path(const Config& cfg, const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::path(name).is_absolute()) return name;
  std::vector<std::string> dirs = {cfg.data_dir};
  if (const char* env = std::getenv("COILPILOT_DATA_DIR")) dirs.emplace_back(env);
  dirs.emplace_back(COILPILOT_SOURCE_DATA_DIR);
  dirs.emplace_back(COILPILOT_DEFAULT_DATA_DIR);
  for (const auto& dir : dirs) {
    if (dir.empty()) continue;
    const fs::path candidate = fs::path(dir) / name;
    if (fs::exists(candidate)) return candidate.string();
  }
  if (fs::exists(name)) return name;
  throw Error(ErrorCode::kIo, "data file '" + name + "' not found");
}

}  // namespace coilpilot
