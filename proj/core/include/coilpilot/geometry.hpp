#pragma once

#include <Eigen/Dense>

namespace coilpilot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

// An oriented plane. The normal points toward the robot side of the surface.
struct Plane {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  // In-plane orthonormal basis (u, v) with u x v = normal. u is the
  // projection of the world x axis (world y when the normal is parallel to x).
  Vec3 u_axis() const;
  Vec3 v_axis() const;

  Vec3 to_world(const Vec2& uv) const;
  Vec2 to_surface(const Vec3& point) const;
  double signed_distance(const Vec3& point) const { return (point - origin).dot(normal); }
};

}  // namespace coilpilot
