#include "coilpilot/geometry.hpp"

#include <cmath>

#include "coilpilot/error.hpp"

namespace coilpilot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec: return "invalid-spec";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kBelowFloor: return "below-floor";
    case ErrorCode::kInvalidLengths: return "invalid-lengths";
    case ErrorCode::kDuplicatePoint: return "duplicate-point";
    case ErrorCode::kDoubleLoad: return "double-load";
    case ErrorCode::kNotCoupled: return "not-coupled";
    case ErrorCode::kSaturated: return "saturated";
    case ErrorCode::kNonMonotoneData: return "non-monotone-data";
    case ErrorCode::kSchemaMismatch: return "schema-mismatch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Vec3 Plane::u_axis() const {
  const Vec3 n = normal.normalized();
  Vec3 ref = Vec3::UnitX();
  if (std::abs(n.dot(ref)) > 0.9) ref = Vec3::UnitY();
  return (ref - ref.dot(n) * n).normalized();
}

Vec3 Plane::v_axis() const { return normal.normalized().cross(u_axis()); }

Vec3 Plane::to_world(const Vec2& uv) const { return origin + uv.x() * u_axis() + uv.y() * v_axis(); }

Vec2 Plane::to_surface(const Vec3& point) const {
  const Vec3 d = point - origin;
  return {d.dot(u_axis()), d.dot(v_axis())};
}

}  // namespace coilpilot
