#include "coilpilot/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coilpilot/error.hpp"
#include "coilpilot/rng.hpp"

namespace coilpilot::anchors {

namespace {
constexpr double kTwoPi = 6.283185307179586476925;
constexpr std::uint64_t kSessionStream = 0x54514E53;  // "TQNS"
}  // namespace

std::string_view to_string(Medium medium) {
  return medium == Medium::kEf30 ? "EF30" : "tissue";
}

Medium medium_from_string(std::string_view name) {
  if (name == "EF30" || name == "ef30") return Medium::kEf30;
  if (name == "tissue") return Medium::kTissue;
  throw Error(ErrorCode::kConfig, "unknown medium '" + std::string(name) + "'");
}

void AnchorSpec::validate() const {
  if (!(target_depth_mm > 0.0 && target_depth_mm <= coil_length_mm)) {
    throw Error(ErrorCode::kInvalidSpec, "target depth must lie in (0, coil_length]");
  }
  if (!(coil_pitch_mm_per_rev > 0.0)) throw Error(ErrorCode::kInvalidSpec, "coil pitch must be > 0");
}

void MediumModel::validate() const {
  if (!(preload_torque_nmm > 0.0)) throw Error(ErrorCode::kInvalidSpec, "preload must be > 0");
  if (!(insertion_torque_at_full_depth_nmm >= 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "insertion torque must be >= 0");
  }
  if (!(release_ratio_eta > 0.0 && release_ratio_eta < 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, "release ratio must lie in (0, 1)");
  }
  if (!(head_contact_stiffness_nmm_per_rad > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "head contact stiffness must be > 0");
  }
  if (!(release_torque_nmm() > insertion_torque_at_full_depth_nmm)) {
    throw Error(ErrorCode::kInvalidSpec,
                "release torque must exceed the insertion torque at full depth");
  }
}

MediumModel default_medium(Medium medium) {
  if (medium == Medium::kEf30) return {2.5, 1.0, 1.23 / 2.5, 20.0};
  return {4.2, 2.1, 2.55 / 4.2, 20.0};
}

double reference_pull_force_n(Medium medium) {
  return medium == Medium::kEf30 ? kPullForceEf30N : kPullForceTissueN;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kUnloaded: return "unloaded";
    case Phase::kLoaded: return "loaded";
    case Phase::kCoupled: return "coupled-to-robot";
    case Phase::kInserting: return "inserting";
    case Phase::kHeadContact: return "head-contact";
    case Phase::kReleased: return "released";
  }
  return "unknown";
}

Phase phase_from_string(std::string_view name) {
  for (Phase p : {Phase::kUnloaded, Phase::kLoaded, Phase::kCoupled, Phase::kInserting,
                  Phase::kHeadContact, Phase::kReleased}) {
    if (to_string(p) == name) return p;
  }
  throw Error(ErrorCode::kSchemaMismatch, "unknown phase '" + std::string(name) + "'");
}

bool is_legal_transition(Phase from, Phase to) {
  if (from == to) return true;
  switch (from) {
    case Phase::kUnloaded: return to == Phase::kLoaded;
    case Phase::kLoaded: return to == Phase::kCoupled;
    case Phase::kCoupled: return to == Phase::kInserting;
    case Phase::kInserting: return to == Phase::kHeadContact;
    case Phase::kHeadContact: return to == Phase::kReleased;
    case Phase::kReleased: return to == Phase::kLoaded;
  }
  return false;
}

DeploymentState load_anchor(const DeploymentState& current, const AnchorSpec& spec,
                            const MediumModel& medium) {
  spec.validate();
  medium.validate();
  if (current.phase != Phase::kUnloaded && current.phase != Phase::kReleased) {
    throw Error(ErrorCode::kDoubleLoad,
                "driver already holds an anchor (" + std::string(to_string(current.phase)) + ")");
  }
  DeploymentState s;
  s.phase = Phase::kLoaded;
  s.holding_torque_nmm = medium.preload_torque_nmm;
  return s;
}

std::vector<std::pair<double, double>> loading_trace(const MediumModel& medium, int samples) {
  // Thread engagement stiffens as the anchor seats: torque ~ preload * x^2
  // over one turn of the driver.
  std::vector<std::pair<double, double>> trace;
  const int n = std::max(samples, 2);
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / (n - 1);
    trace.emplace_back(kTwoPi * x, medium.preload_torque_nmm * x * x);
  }
  return trace;
}

DeploymentState couple(const DeploymentState& current) {
  if (current.phase != Phase::kLoaded) {
    throw Error(ErrorCode::kNotCoupled,
                "coupling needs a loaded driver (" + std::string(to_string(current.phase)) + ")");
  }
  DeploymentState s = current;
  s.phase = Phase::kCoupled;
  return s;
}

std::string_view to_string(RotateStatus status) {
  switch (status) {
    case RotateStatus::kAdvanced: return "advanced";
    case RotateStatus::kNotEngaged: return "not-engaged";
    case RotateStatus::kReleased: return "released";
    case RotateStatus::kFreeSpin: return "free-spin";
  }
  return "unknown";
}

RotateResult rotate_driver(const DeploymentState& state, double dtheta_rad, bool in_contact,
                           double normal_force_n, const MediumModel& medium, const AnchorSpec& spec,
                           const DeploymentOptions& options) {
  if (!(dtheta_rad >= 0.0) || !std::isfinite(dtheta_rad)) {
    throw Error(ErrorCode::kOutOfRange, "driver rotation must be finite and >= 0");
  }
  if (state.phase == Phase::kUnloaded || state.phase == Phase::kLoaded) {
    throw Error(ErrorCode::kNotCoupled,
                "driver is not coupled (" + std::string(to_string(state.phase)) + ")");
  }
  RotateResult out{state, RotateStatus::kAdvanced, {}};
  DeploymentState& s = out.state;
  s.total_rotation_rad += dtheta_rad;

  if (state.phase == Phase::kReleased) {
    s.driver_torque_nmm = 0.0;
    out.status = RotateStatus::kFreeSpin;
    return out;
  }

  const bool pressed = normal_force_n >= options.puncture_force_n;
  const bool embedded = state.phase != Phase::kCoupled && !options.require_sustained_force;
  if (!in_contact || !(pressed || embedded)) {
    s.driver_torque_nmm = 0.0;
    out.status = RotateStatus::kNotEngaged;
    return out;
  }

  const double target = spec.target_depth_mm;
  double remaining = dtheta_rad;
  if (s.phase == Phase::kCoupled) {
    s.phase = Phase::kInserting;
    out.entered.push_back(s.phase);
  }

  if (s.phase == Phase::kInserting) {
    const double needed = (target - s.depth_mm) * kTwoPi / spec.coil_pitch_mm_per_rev;
    if (remaining >= needed) {
      remaining -= needed;
      s.depth_mm = target;
      s.phase = Phase::kHeadContact;
      s.head_rotation_rad = 0.0;
      out.entered.push_back(s.phase);
    } else {
      s.depth_mm = std::min(target, s.depth_mm + spec.coil_pitch_mm_per_rev * remaining / kTwoPi);
      remaining = 0.0;
    }
    s.driver_torque_nmm = medium.insertion_torque_at_full_depth_nmm * (s.depth_mm / target);
  }

  if (s.phase == Phase::kHeadContact) {
    const double k = medium.head_contact_stiffness_nmm_per_rad;
    const double threshold = medium.release_torque_nmm();
    const double to_release =
        (threshold - medium.insertion_torque_at_full_depth_nmm) / k - s.head_rotation_rad;
    if (remaining >= to_release) {
      s.head_rotation_rad += to_release;
      s.driver_torque_nmm = threshold;
      s.release_torque_nmm = threshold;
      s.phase = Phase::kReleased;
      out.entered.push_back(s.phase);
      out.status = RotateStatus::kReleased;
    } else {
      s.head_rotation_rad += remaining;
      s.driver_torque_nmm = medium.insertion_torque_at_full_depth_nmm + k * s.head_rotation_rad;
    }
  }
  return out;
}

// --- torque sensing -------------------------------------------------------

void TorqueSensorSpec::validate() const {
  const bool positive = flexure_stiffness_nmm_per_rad > 0.0 && magnet_gap_g0_mm > 0.0 &&
                        lever_radius_mm > 0.0 && field_coefficient > 0.0 && min_gap_mm > 0.0 &&
                        resolution_nmm > 0.0 && calibration_error >= 0.0;
  if (!positive) throw Error(ErrorCode::kInvalidSpec, "torque sensor parameters must be positive");
  if (!(min_gap_mm < magnet_gap_g0_mm)) {
    throw Error(ErrorCode::kInvalidSpec, "minimum gap must be below the rest gap");
  }
  if (!(calibration_max_torque_nmm > 0.0 && calibration_max_torque_nmm < saturation_torque_nmm())) {
    throw Error(ErrorCode::kInvalidSpec, "calibration range must end below saturation");
  }
  if (calibration_points < 5) throw Error(ErrorCode::kInvalidSpec, "need >= 5 calibration points");
}

double TorqueSensorSpec::saturation_torque_nmm() const {
  return (magnet_gap_g0_mm - min_gap_mm) * flexure_stiffness_nmm_per_rad / lever_radius_mm;
}

double hall_signal(double torque_nmm, const TorqueSensorSpec& spec) {
  if (!(torque_nmm >= 0.0)) throw Error(ErrorCode::kOutOfRange, "torque must be >= 0");
  const double angle = torque_nmm / spec.flexure_stiffness_nmm_per_rad;
  const double gap = spec.magnet_gap_g0_mm - spec.lever_radius_mm * angle;
  if (gap <= spec.min_gap_mm) {
    throw Error(ErrorCode::kSaturated, "magnet gap " + std::to_string(gap) + " mm at " +
                                           std::to_string(torque_nmm) + " N.mm");
  }
  return spec.field_coefficient / (gap * gap);
}

CalibrationMap::CalibrationMap(std::vector<double> signals, std::vector<double> torques)
    : x_(std::move(signals)), y_(std::move(torques)) {
  const std::size_t n = x_.size();
  std::vector<double> h(n - 1);
  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    delta[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  slopes_.assign(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    slopes_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  // Shape-preserving three-point end slopes.
  const auto edge = [](double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) m = 3.0 * d0;
    return m;
  };
  slopes_[0] = edge(h[0], h[1], delta[0], delta[1]);
  slopes_[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double CalibrationMap::operator()(double signal) const {
  if (x_.empty()) return 0.0;
  if (signal <= x_.front()) return y_.front();
  if (signal >= x_.back()) return y_.back() + slopes_.back() * (signal - x_.back());
  const auto it = std::upper_bound(x_.begin(), x_.end(), signal);
  const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[k + 1] - x_[k];
  const double t = (signal - x_[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * slopes_[k] +
         (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * slopes_[k + 1];
}

CalibrationMap fit_calibration(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 5) {
    throw Error(ErrorCode::kNonMonotoneData,
                "calibration needs >= 5 samples, got " + std::to_string(samples.size()));
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
      throw Error(ErrorCode::kNonMonotoneData, "signals must be strictly increasing");
    }
    if (i > 0 && samples[i].second < samples[i - 1].second) {
      throw Error(ErrorCode::kNonMonotoneData, "torque must not decrease with signal");
    }
    x.push_back(samples[i].first);
    y.push_back(samples[i].second);
  }
  return CalibrationMap(std::move(x), std::move(y));
}

CalibrationMap factory_calibration(const TorqueSensorSpec& spec) {
  spec.validate();
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < spec.calibration_points; ++i) {
    const double tau = spec.calibration_max_torque_nmm * i / (spec.calibration_points - 1);
    samples.emplace_back(hall_signal(tau, spec), tau);
  }
  return fit_calibration(samples);
}

SensorSession draw_session(const TorqueSensorSpec& spec, std::uint64_t seed, std::uint64_t session) {
  const CounterRng rng{seed, kSessionStream};
  return {spec.calibration_error * (2.0 * rng.uniform(session) - 1.0)};
}

TorqueSensor::TorqueSensor(TorqueSensorSpec spec) : spec_(spec), map_(factory_calibration(spec_)) {}

double TorqueSensor::read(double true_torque_nmm, const SensorSession& session) const {
  const double estimate = map_(hall_signal(true_torque_nmm, spec_)) * (1.0 + session.bias);
  const double steps = std::round(estimate / spec_.resolution_nmm);
  return std::max(0.0, steps) * spec_.resolution_nmm;
}

double sense_torque(double true_torque_nmm, const TorqueSensor& sensor, const SensorSession& session) {
  return sensor.read(true_torque_nmm, session);
}

}  // namespace coilpilot::anchors
