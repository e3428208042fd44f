#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coilpilot/geometry.hpp"

namespace coilpilot::trajectory {

struct Target {
  std::string label;
  Vec3 position = Vec3::Zero();
};

struct TargetSet {
  std::string source;
  std::vector<Target> points;

  // >= 2 points with unique labels.
  void validate() const;
};

struct DiscretePath {
  std::vector<Vec3> points;
  double spacing_mm = 0.0;  // arclength between consecutive points
};

// Centripetal Catmull-Rom through every target. The curve is parameterized
// by the accumulated centripetal knot t in [0, knot_end()], which makes it
// C1 across segment joints. End segments use reflected phantom points.
class SplinePath {
 public:
  explicit SplinePath(const TargetSet& targets);

  std::size_t segment_count() const { return knots_.size() - 1; }
  double knot(std::size_t i) const { return knots_[i]; }
  double knot_end() const { return knots_.back(); }

  Vec3 at(double t) const;
  Vec3 derivative(double t) const;

  double segment_length(std::size_t i) const { return lengths_[i]; }
  double length() const { return total_length_; }
  // Inverse of the arclength function, s in [0, length()].
  double param_at_length(double s) const;

 private:
  struct Segment {
    Vec3 p1, p2, m1, m2;  // Hermite form, tangents scaled to the knot span
    double t0 = 0.0;
    double span = 1.0;
  };
  std::size_t segment_at(double t) const;
  double arc(std::size_t seg, double t_begin, double t_end) const;

  std::vector<Segment> segments_;
  std::vector<double> knots_;
  std::vector<double> lengths_;
  std::vector<double> cumulative_;
  double total_length_ = 0.0;
};

// Throws kDuplicatePoint when consecutive targets coincide.
SplinePath spline_path(const TargetSet& targets);

// n points equally spaced in arclength, endpoints included.
DiscretePath discretize(const SplinePath& curve, int n);

TargetSet circular_sites(double radius_mm, int k, const Plane& plane);

// Moves every site along the surface normal by standoff_mm.
TargetSet project_standoff(const TargetSet& sites, const Plane& surface, double standoff_mm);

TargetSet target_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TargetSet& set);
TargetSet load_target_set(const std::string& path);

std::vector<Vec3> positions(const TargetSet& set);

}  // namespace coilpilot::trajectory
