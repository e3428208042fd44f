#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coilpilot::anchors {

enum class Medium { kEf30, kTissue };
std::string_view to_string(Medium medium);
Medium medium_from_string(std::string_view name);

struct AnchorSpec {
  double coil_length_mm = 6.0;
  double coil_pitch_mm_per_rev = 1.0;
  double head_length_mm = 3.0;
  double target_depth_mm = 5.0;
  Medium medium = Medium::kEf30;

  void validate() const;
};

struct MediumModel {
  double preload_torque_nmm = 2.5;
  double insertion_torque_at_full_depth_nmm = 1.0;
  double release_ratio_eta = 0.492;
  double head_contact_stiffness_nmm_per_rad = 20.0;

  double release_torque_nmm() const { return release_ratio_eta * preload_torque_nmm; }
  // Release must only be reachable after head contact.
  void validate() const;
};

// Defaults per medium. The release ratio reproduces the mean deployment
// torque from the loading preload: 1.23/2.5 for EF30, 2.55/4.2 for tissue.
MediumModel default_medium(Medium medium);

// Pull-out strength of implanted anchors; reported, not simulated.
inline constexpr double kPullForceEf30N = 3.94;
inline constexpr double kPullForceTissueN = 3.99;
inline constexpr double kRequiredAnnuloplastyPullN = 0.52;
double reference_pull_force_n(Medium medium);

enum class Phase { kUnloaded, kLoaded, kCoupled, kInserting, kHeadContact, kReleased };
std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view name);

// True when `to` may directly follow `from` in the deployment machine.
// A released driver may be reloaded, which starts a new cycle at kLoaded.
bool is_legal_transition(Phase from, Phase to);

struct DeploymentState {
  Phase phase = Phase::kUnloaded;
  double depth_mm = 0.0;
  double total_rotation_rad = 0.0;
  double driver_torque_nmm = 0.0;
  double holding_torque_nmm = 0.0;  // thread preload set when loading
  double head_rotation_rad = 0.0;   // rotation since the head met the surface
  double release_torque_nmm = 0.0;  // valid once released
};

struct DeploymentOptions {
  double puncture_force_n = 0.5;
  // When true the puncture force is needed for every increment of insertion,
  // not only to start it.
  bool require_sustained_force = true;
};

// Seats an anchor in an empty (unloaded or released) driver.
DeploymentState load_anchor(const DeploymentState& current, const AnchorSpec& spec,
                            const MediumModel& medium);

// Monotone loading torque profile ending at the preload.
std::vector<std::pair<double, double>> loading_trace(const MediumModel& medium, int samples);

DeploymentState couple(const DeploymentState& current);

enum class RotateStatus { kAdvanced, kNotEngaged, kReleased, kFreeSpin };
std::string_view to_string(RotateStatus status);

struct RotateResult {
  DeploymentState state;
  RotateStatus status = RotateStatus::kAdvanced;
  std::vector<Phase> entered;  // phases entered during this call, in order
};

RotateResult rotate_driver(const DeploymentState& state, double dtheta_rad, bool in_contact,
                           double normal_force_n, const MediumModel& medium, const AnchorSpec& spec,
                           const DeploymentOptions& options = {});

// --- torque sensing -------------------------------------------------------

struct TorqueSensorSpec {
  double flexure_stiffness_nmm_per_rad = 20.0;
  double magnet_gap_g0_mm = 2.0;
  double lever_radius_mm = 5.0;
  double field_coefficient = 400.0;  // signal units x mm^2
  double min_gap_mm = 0.5;
  double resolution_nmm = 0.07;
  double calibration_error = 0.05;  // bound on the per-session multiplicative bias
  double calibration_max_torque_nmm = 5.0;
  int calibration_points = 26;

  void validate() const;
  double saturation_torque_nmm() const;
};

// Flexure -> magnet gap -> hall signal. Throws kSaturated at the minimum gap.
double hall_signal(double torque_nmm, const TorqueSensorSpec& spec);

// Monotone piecewise-cubic (Fritsch-Carlson) map from signal to torque.
class CalibrationMap {
 public:
  CalibrationMap() = default;
  CalibrationMap(std::vector<double> signals, std::vector<double> torques);

  double operator()(double signal) const;
  const std::vector<double>& signals() const { return x_; }
  const std::vector<double>& torques() const { return y_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slopes_;
};

// Needs at least 5 samples with strictly increasing signal and nondecreasing torque.
CalibrationMap fit_calibration(const std::vector<std::pair<double, double>>& samples);

// Fits the map on the noise-free forward chain over [0, calibration_max_torque].
CalibrationMap factory_calibration(const TorqueSensorSpec& spec);

struct SensorSession {
  double bias = 0.0;  // multiplicative calibration error of this handle session
};

SensorSession draw_session(const TorqueSensorSpec& spec, std::uint64_t seed, std::uint64_t session);

class TorqueSensor {
 public:
  explicit TorqueSensor(TorqueSensorSpec spec);
  double read(double true_torque_nmm, const SensorSession& session) const;
  const TorqueSensorSpec& spec() const { return spec_; }
  const CalibrationMap& calibration() const { return map_; }

 private:
  TorqueSensorSpec spec_;
  CalibrationMap map_;
};

double sense_torque(double true_torque_nmm, const TorqueSensor& sensor, const SensorSession& session);

}  // namespace coilpilot::anchors
