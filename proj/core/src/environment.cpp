#include "coilpilot/environment.hpp"

#include <algorithm>
#include <cmath>

#include "coilpilot/error.hpp"
#include "coilpilot/rng.hpp"

namespace coilpilot::environment {

namespace {
constexpr std::uint64_t kSensorStream = 0x454D5452;  // "EMTR"

double quantize(double x, double q) { return q > 0.0 ? std::round(x / q) * q : x; }
}  // namespace

void MotileTarget::validate() const {
  if (!(amplitude_mm >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "amplitude must be >= 0");
  if (!(frequency_hz > 0.0)) throw Error(ErrorCode::kInvalidSpec, "frequency must be > 0");
  if (std::abs(base_pose.normal.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidSpec, "surface normal must be unit length");
  }
  if (!(surface_radius_mm > 0.0)) throw Error(ErrorCode::kInvalidSpec, "surface radius must be > 0");
}

double displacement_at(double t_s, const MotileTarget& target) {
  const double c = std::cos(2.0 * kPi * target.frequency_hz * t_s + target.phase_rad);
  // Clamp guards the last ulp so the bound [0, amplitude] holds exactly.
  const double d = 0.5 * target.amplitude_mm * (1.0 - c);
  return std::min(std::max(d, 0.0), target.amplitude_mm);
}

Plane target_pose_at(double t_s, const MotileTarget& target) {
  Plane p = target.base_pose;
  p.origin = target.base_pose.origin + displacement_at(t_s, target) * target.base_pose.normal;
  return p;
}

Vec3 site_world_position(const AnchorSite& site, const Plane& pose) { return pose.to_world(site.uv); }

ContactResult resolve_contact(const Vec3& tip_free, const Vec3& /*tangent*/, const Plane& surface,
                              double stiffness_n_per_mm, double surface_radius_mm,
                              const std::optional<Vec3>& stick_point) {
  if (!(stiffness_n_per_mm > 0.0)) throw Error(ErrorCode::kInvalidSpec, "stiffness must be > 0");
  ContactResult out;
  out.tip = tip_free;
  const double depth = -surface.signed_distance(tip_free);
  if (depth <= 0.0) return out;
  const Vec3 projected = tip_free + depth * surface.normal;
  if ((projected - surface.origin).norm() > surface_radius_mm) return out;

  out.tip = projected;
  out.state.in_contact = true;
  out.state.penetration_mm = depth;
  out.state.normal_force_n = stiffness_n_per_mm * depth;
  if (stick_point) {
    out.state.tangential_slip_mm = (surface.to_surface(projected) - surface.to_surface(*stick_point)).norm();
  }
  return out;
}

void SensorModel::validate() const {
  if (!(position_noise_sigma_mm >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "sigma must be >= 0");
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::kInvalidSpec, "sample rate must be > 0");
  if (!(quantization_mm >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "quantization must be >= 0");
}

std::uint64_t sample_index_at(double t_s, const SensorModel& model) {
  // Small bias keeps exact multiples of the period on the later sample.
  return static_cast<std::uint64_t>(std::floor(t_s * model.sample_rate_hz + 1e-9));
}

Vec3 sense_tip(const Vec3& true_tip, const SensorModel& model, std::uint64_t sample_index) {
  const CounterRng rng{model.seed, kSensorStream};
  Vec3 out;
  for (int axis = 0; axis < 3; ++axis) {
    const double noise = model.position_noise_sigma_mm > 0.0
                             ? model.position_noise_sigma_mm *
                                   rng.normal(sample_index, static_cast<std::uint32_t>(axis))
                             : 0.0;
    out[axis] = quantize(true_tip[axis] + noise, model.quantization_mm);
  }
  return out;
}

}  // namespace coilpilot::environment
