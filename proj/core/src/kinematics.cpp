#include "coilpilot/kinematics.hpp"

#include <cmath>
#include <string>

#include "coilpilot/error.hpp"

namespace coilpilot::kinematics {

void ActuatorSpec::validate() const {
  for (const auto& stack : stacks) stack.validate();
  if (!(chamber_offset_mm > 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "chamber_offset_dc must be > 0");
  }
  if (!(p_max_kpa > 0.0)) throw Error(ErrorCode::kInvalidSpec, "p_max must be > 0");
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double diff = std::remainder(chamber_angles_rad[i] - chamber_angles_rad[j], 2.0 * kPi);
      if (std::abs(diff) < 1e-6) {
        throw Error(ErrorCode::kInvalidSpec, "chamber angles must be distinct modulo 2 pi");
      }
    }
  }
}

ArcState arc_from_lengths(const LengthVector& lengths, const ActuatorSpec& spec) {
  for (int i = 0; i < 3; ++i) {
    if (!(lengths[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidLengths,
                  "chamber " + std::to_string(i + 1) + " length " + std::to_string(lengths[i]));
    }
  }
  // Constant curvature: l_i = s - d * theta * cos(psi_i - phi). With
  // a = theta cos(phi), b = theta sin(phi) this is linear in (s, a, b).
  const double d = spec.chamber_offset_mm;
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    const double psi = spec.chamber_angles_rad[i];
    m(i, 0) = 1.0;
    m(i, 1) = -d * std::cos(psi);
    m(i, 2) = -d * std::sin(psi);
  }
  const Vec3 x = m.partialPivLu().solve(lengths);

  ArcState arc;
  arc.arclength_mm = x[0];
  arc.bend_rad = std::hypot(x[1], x[2]);
  if (arc.bend_rad < 1e-12) {
    arc.bend_rad = 0.0;
    arc.curvature_per_mm = 0.0;
    arc.plane_angle_rad = 0.0;
  } else {
    arc.curvature_per_mm = arc.bend_rad / arc.arclength_mm;
    arc.plane_angle_rad = std::atan2(x[2], x[1]);
  }
  return arc;
}

namespace detail {

Vec3 tip_position_series(const ArcState& arc) {
  const double s = arc.arclength_mm;
  const double t = arc.curvature_per_mm * s;
  const double t2 = t * t;
  // (1 - cos t)/kappa and sin t/kappa, expanded about t = 0.
  const double lateral = s * t * (0.5 - t2 / 24.0 + t2 * t2 / 720.0);
  const double axial = s * (1.0 - t2 / 6.0 + t2 * t2 / 120.0);
  return {lateral * std::cos(arc.plane_angle_rad), lateral * std::sin(arc.plane_angle_rad), axial};
}

Vec3 tip_position_closed(const ArcState& arc) {
  const double r = 1.0 / arc.curvature_per_mm;
  const double t = arc.curvature_per_mm * arc.arclength_mm;
  const double half = std::sin(0.5 * t);
  const double lateral = r * 2.0 * half * half;  // r (1 - cos t) without cancellation
  return {lateral * std::cos(arc.plane_angle_rad), lateral * std::sin(arc.plane_angle_rad),
          r * std::sin(t)};
}

}  // namespace detail

TipPose tip_from_arc(const ArcState& arc) {
  const double t = arc.curvature_per_mm * arc.arclength_mm;
  TipPose pose;
  pose.position = std::abs(t) < kSeriesBendThreshold ? detail::tip_position_series(arc)
                                                     : detail::tip_position_closed(arc);
  const double st = std::sin(t);
  pose.tangent = {st * std::cos(arc.plane_angle_rad), st * std::sin(arc.plane_angle_rad),
                  std::cos(t)};
  return pose;
}

std::vector<Vec3> backbone_polyline(const ArcState& arc, int n_points) {
  if (n_points < 2) throw Error(ErrorCode::kOutOfRange, "backbone needs at least 2 points");
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    ArcState partial = arc;
    partial.arclength_mm = arc.arclength_mm * static_cast<double>(i) / (n_points - 1);
    partial.bend_rad = partial.curvature_per_mm * partial.arclength_mm;
    points.push_back(i == n_points - 1 ? tip_from_arc(arc).position
                                       : tip_from_arc(partial).position);
  }
  return points;
}

LengthVector chamber_lengths(const PressureVector& pressures, const ActuatorSpec& spec,
                             const ChamberStrokes& strokes) {
  LengthVector l;
  for (int i = 0; i < 3; ++i) {
    l[i] = mechanics::stack_length(pressures[i], spec.stacks[static_cast<std::size_t>(i)],
                                   strokes[static_cast<std::size_t>(i)]);
  }
  return l;
}

TipPose tip_from_pressures(const PressureVector& pressures, const ActuatorSpec& spec,
                           const ChamberStrokes& strokes) {
  return tip_from_arc(arc_from_lengths(chamber_lengths(pressures, spec, strokes), spec));
}

Mat3 pressure_jacobian(const PressureVector& pressures, const ActuatorSpec& spec,
                       const ChamberStrokes& strokes, double step_kpa, double floor_kpa) {
  for (int i = 0; i < 3; ++i) {
    if (!(pressures[i] >= floor_kpa)) {
      throw Error(ErrorCode::kBelowFloor, "chamber " + std::to_string(i + 1) + " at " +
                                              std::to_string(pressures[i]) + " kPa");
    }
  }
  Mat3 j;
  for (int c = 0; c < 3; ++c) {
    PressureVector hi = pressures;
    PressureVector lo = pressures;
    hi[c] += step_kpa;
    lo[c] -= step_kpa;
    const Vec3 d = tip_from_pressures(hi, spec, strokes).position -
                   tip_from_pressures(lo, spec, strokes).position;
    j.col(c) = d / (2.0 * step_kpa);
  }
  return j;
}

Mat3 damped_pseudo_inverse(const Mat3& jacobian, double lambda) {
  const Eigen::JacobiSVD<Mat3> svd(jacobian, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();
  Vec3 filtered;
  for (int i = 0; i < 3; ++i) {
    const double denom = sigma[i] * sigma[i] + lambda * lambda;
    filtered[i] = denom > 0.0 ? sigma[i] / denom : 0.0;
  }
  return svd.matrixV() * filtered.asDiagonal() * svd.matrixU().transpose();
}

Vec3 singular_values(const Mat3& m) { return Eigen::JacobiSVD<Mat3>(m).singularValues(); }

}  // namespace coilpilot::kinematics
