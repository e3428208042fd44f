#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "coilpilot/geometry.hpp"

namespace coilpilot::environment {

inline constexpr double kTissueDamageForceN = 5.5;

struct AnchorSite {
  std::string label;
  Vec2 uv = Vec2::Zero();  // surface coordinates, mm
};

// A surface that moves along its own normal with a raised-cosine law.
struct MotileTarget {
  Plane base_pose{Vec3(0.0, 0.0, 50.0), Vec3(0.0, 0.0, -1.0)};
  double amplitude_mm = 8.0;
  double frequency_hz = 1.0;
  double phase_rad = 0.0;
  double surface_radius_mm = 40.0;
  std::vector<AnchorSite> anchor_sites;

  void validate() const;
};

// Displacement along the normal at time t, in [0, amplitude].
double displacement_at(double t_s, const MotileTarget& target);

Plane target_pose_at(double t_s, const MotileTarget& target);

Vec3 site_world_position(const AnchorSite& site, const Plane& pose);

struct ContactState {
  bool in_contact = false;
  double penetration_mm = 0.0;
  double normal_force_n = 0.0;
  double tangential_slip_mm = 0.0;
};

struct ContactResult {
  ContactState state;
  Vec3 tip = Vec3::Zero();  // tip after compliance, on or above the surface
};

// Quasi-static contact: a free tip past the surface is projected back onto it
// and pushes with force = stiffness x penetration. `stiffness_n_per_mm` is the
// series combination of tissue and actuator axial compliance. Tips outside
// `surface_radius_mm` of the plane origin miss the surface. When `stick_point`
// is given, slip is the in-plane distance of the contact from it.
ContactResult resolve_contact(const Vec3& tip_free, const Vec3& tangent, const Plane& surface,
                              double stiffness_n_per_mm,
                              double surface_radius_mm = std::numeric_limits<double>::infinity(),
                              const std::optional<Vec3>& stick_point = std::nullopt);

// EM tracker stand-in.
struct SensorModel {
  double position_noise_sigma_mm = 0.25;
  double quantization_mm = 0.01;
  double sample_rate_hz = 40.0;
  std::uint64_t seed = 0;

  void validate() const;
};

std::uint64_t sample_index_at(double t_s, const SensorModel& model);

// Deterministic in (seed, sample_index).
Vec3 sense_tip(const Vec3& true_tip, const SensorModel& model, std::uint64_t sample_index);

}  // namespace coilpilot::environment
