#pragma once

#include <array>
#include <optional>
#include <vector>

#include "coilpilot/geometry.hpp"
#include "coilpilot/mechanics.hpp"

namespace coilpilot::kinematics {

using PressureVector = Eigen::Vector3d;  // kPa, one entry per chamber
using LengthVector = Eigen::Vector3d;    // mm
using ChamberStrokes = std::array<mechanics::Stroke, 3>;

inline constexpr ChamberStrokes kSettledStrokes = {
    mechanics::Stroke::kSettled, mechanics::Stroke::kSettled, mechanics::Stroke::kSettled};

// Bend angle below which tip_from_arc switches to its series expansion.
inline constexpr double kSeriesBendThreshold = 1e-4;
inline constexpr double kJacobianStepKpa = 0.05;

struct ActuatorSpec {
  std::array<mechanics::StackSpec, 3> stacks{};
  // Radial distance from the central axis to each stack centre.
  double chamber_offset_mm = 8.0;
  std::array<double, 3> chamber_angles_rad = {0.0, 2.0 * kPi / 3.0, 4.0 * kPi / 3.0};
  double p_max_kpa = 100.0;

  void validate() const;
};

struct ArcState {
  double arclength_mm = 0.0;
  double curvature_per_mm = 0.0;
  double plane_angle_rad = 0.0;
  double bend_rad = 0.0;

  std::optional<double> radius_mm() const {
    if (curvature_per_mm == 0.0) return std::nullopt;
    return 1.0 / curvature_per_mm;
  }
};

struct TipPose {
  Vec3 position = Vec3::Zero();
  Vec3 tangent = Vec3::UnitZ();
};

ArcState arc_from_lengths(const LengthVector& lengths, const ActuatorSpec& spec);

TipPose tip_from_arc(const ArcState& arc);

// n_points samples at equal arclength, base first, tip last.
std::vector<Vec3> backbone_polyline(const ArcState& arc, int n_points);

LengthVector chamber_lengths(const PressureVector& pressures, const ActuatorSpec& spec,
                             const ChamberStrokes& strokes = kSettledStrokes);

// Full forward chain: pressures -> stack lengths -> arc -> tip.
TipPose tip_from_pressures(const PressureVector& pressures, const ActuatorSpec& spec,
                           const ChamberStrokes& strokes = kSettledStrokes);

// d(tip position)/d(pressure) by central differences through the full chain.
// Every pressure must be at or above floor_kpa (kBelowFloor otherwise).
Mat3 pressure_jacobian(const PressureVector& pressures, const ActuatorSpec& spec,
                       const ChamberStrokes& strokes = kSettledStrokes,
                       double step_kpa = kJacobianStepKpa,
                       double floor_kpa = mechanics::kDefaultPressureFloorKpa);

// J^T (J J^T + lambda^2 I)^-1 evaluated through the SVD filter s / (s^2 + lambda^2).
Mat3 damped_pseudo_inverse(const Mat3& jacobian, double lambda);

Vec3 singular_values(const Mat3& m);

namespace detail {
// Both branches of tip_from_arc, exposed so the branch point can be tested.
Vec3 tip_position_series(const ArcState& arc);
Vec3 tip_position_closed(const ArcState& arc);
}  // namespace detail

}  // namespace coilpilot::kinematics
