#include "coilpilot/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include "coilpilot/error.hpp"

namespace coilpilot::trajectory {

namespace {

constexpr double kQuadratureTolerance = 1e-10;
constexpr double kDuplicateTolerance = 1e-9;

// Hermite basis and derivatives on u in [0, 1].
Vec3 hermite(const Vec3& p1, const Vec3& m1, const Vec3& p2, const Vec3& m2, double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * p1 + (u3 - 2 * u2 + u) * m1 + (-2 * u3 + 3 * u2) * p2 +
         (u3 - u2) * m2;
}

Vec3 hermite_derivative(const Vec3& p1, const Vec3& m1, const Vec3& p2, const Vec3& m2, double u) {
  const double u2 = u * u;
  return (6 * u2 - 6 * u) * p1 + (3 * u2 - 4 * u + 1) * m1 + (-6 * u2 + 6 * u) * p2 +
         (3 * u2 - 2 * u) * m2;
}

}  // namespace

void TargetSet::validate() const {
  if (points.size() < 2) {
    throw Error(ErrorCode::kInvalidSpec, "a target set needs >= 2 points");
  }
  std::set<std::string> labels;
  for (const auto& p : points) {
    if (!labels.insert(p.label).second) {
      throw Error(ErrorCode::kInvalidSpec, "duplicate target label '" + p.label + "'");
    }
    if (!p.position.allFinite()) {
      throw Error(ErrorCode::kInvalidSpec, "target '" + p.label + "' is not finite");
    }
  }
}

SplinePath::SplinePath(const TargetSet& targets) {
  targets.validate();
  const auto& pts = targets.points;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if ((pts[i + 1].position - pts[i].position).norm() < kDuplicateTolerance) {
      throw Error(ErrorCode::kDuplicatePoint,
                  "targets '" + pts[i].label + "' and '" + pts[i + 1].label + "' coincide");
    }
  }

  std::vector<Vec3> p;
  p.reserve(n + 2);
  p.push_back(2.0 * pts[0].position - pts[1].position);
  for (const auto& t : pts) p.push_back(t.position);
  p.push_back(2.0 * pts[n - 1].position - pts[n - 2].position);

  std::vector<double> t(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) t[i] = t[i - 1] + std::sqrt((p[i] - p[i - 1]).norm());

  knots_.assign(t.begin() + 1, t.end() - 1);
  const double origin = knots_.front();
  for (double& k : knots_) k -= origin;

  for (std::size_t i = 1; i + 2 < p.size(); ++i) {
    const double d01 = t[i] - t[i - 1];
    const double d12 = t[i + 1] - t[i];
    const double d23 = t[i + 2] - t[i + 1];
    const Vec3 v1 = (p[i] - p[i - 1]) / d01 - (p[i + 1] - p[i - 1]) / (d01 + d12) +
                    (p[i + 1] - p[i]) / d12;
    const Vec3 v2 = (p[i + 1] - p[i]) / d12 - (p[i + 2] - p[i]) / (d12 + d23) +
                    (p[i + 2] - p[i + 1]) / d23;
    segments_.push_back({p[i], p[i + 1], v1 * d12, v2 * d12, t[i] - origin, d12});
  }

  cumulative_.assign(1, 0.0);
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    lengths_.push_back(arc(s, knots_[s], knots_[s + 1]));
    cumulative_.push_back(cumulative_.back() + lengths_.back());
  }
  total_length_ = cumulative_.back();
}

std::size_t SplinePath::segment_at(double t) const {
  if (t <= knots_.front()) return 0;
  if (t >= knots_.back()) return segments_.size() - 1;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return std::min<std::size_t>(static_cast<std::size_t>(it - knots_.begin()) - 1,
                               segments_.size() - 1);
}

Vec3 SplinePath::at(double t) const {
  const Segment& s = segments_[segment_at(t)];
  const double u = std::clamp((t - s.t0) / s.span, 0.0, 1.0);
  return hermite(s.p1, s.m1, s.p2, s.m2, u);
}

Vec3 SplinePath::derivative(double t) const {
  const Segment& s = segments_[segment_at(t)];
  const double u = std::clamp((t - s.t0) / s.span, 0.0, 1.0);
  return hermite_derivative(s.p1, s.m1, s.p2, s.m2, u) / s.span;
}

double SplinePath::arc(std::size_t seg, double t_begin, double t_end) const {
  if (t_end <= t_begin) return 0.0;
  const Segment& s = segments_[seg];
  const auto speed = [&](double t) {
    return hermite_derivative(s.p1, s.m1, s.p2, s.m2, (t - s.t0) / s.span).norm() / s.span;
  };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(speed, t_begin, t_end, 15,
                                                                       kQuadratureTolerance);
}

double SplinePath::param_at_length(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= total_length_) return knot_end();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t seg =
      std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()) - 1,
                            segments_.size() - 1);
  const double target = s - cumulative_[seg];
  double lo = knots_[seg];
  double hi = knots_[seg + 1];
  double t = lo + (hi - lo) * target / lengths_[seg];
  for (int iter = 0; iter < 50; ++iter) {
    const double g = arc(seg, knots_[seg], t) - target;
    if (std::abs(g) < 1e-12 * std::max(1.0, total_length_)) break;
    if (g > 0.0) hi = t; else lo = t;
    const double speed = derivative(t).norm();
    double next = speed > 0.0 ? t - g / speed : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return t;
}

SplinePath spline_path(const TargetSet& targets) { return SplinePath(targets); }

DiscretePath discretize(const SplinePath& curve, int n) {
  if (n < 2) throw Error(ErrorCode::kInvalidSpec, "discretize needs n >= 2");
  DiscretePath out;
  out.spacing_mm = curve.length() / (n - 1);
  out.points.reserve(static_cast<std::size_t>(n));
  out.points.push_back(curve.at(0.0));
  for (int i = 1; i + 1 < n; ++i) {
    out.points.push_back(curve.at(curve.param_at_length(out.spacing_mm * i)));
  }
  out.points.push_back(curve.at(curve.knot_end()));
  return out;
}

TargetSet circular_sites(double radius_mm, int k, const Plane& plane) {
  if (!(radius_mm > 0.0) || k < 1) {
    throw Error(ErrorCode::kInvalidSpec, "circular sites need radius > 0 and k >= 1");
  }
  TargetSet set;
  set.source = "circle r=" + std::to_string(radius_mm) + " k=" + std::to_string(k);
  for (int j = 0; j < k; ++j) {
    const double a = 2.0 * kPi * j / k;
    set.points.push_back(
        {"site" + std::to_string(j + 1), plane.to_world(Vec2(radius_mm * std::cos(a),
                                                             radius_mm * std::sin(a)))});
  }
  return set;
}

TargetSet project_standoff(const TargetSet& sites, const Plane& surface, double standoff_mm) {
  if (!(standoff_mm >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "standoff must be >= 0");
  TargetSet out = sites;
  const Vec3 n = surface.normal.normalized();
  for (auto& p : out.points) p.position += standoff_mm * n;
  return out;
}

TargetSet target_set_from_json(const nlohmann::json& j) {
  try {
    TargetSet set;
    set.source = j.value("source", "");
    for (const auto& p : j.at("points")) {
      set.points.push_back({p.at("label").get<std::string>(),
                            Vec3(p.at("x_mm").get<double>(), p.at("y_mm").get<double>(),
                                 p.at("z_mm").get<double>())});
    }
    set.validate();
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("target set: ") + e.what());
  }
}

nlohmann::json to_json(const TargetSet& set) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : set.points) {
    points.push_back({{"label", p.label},
                      {"x_mm", p.position.x()},
                      {"y_mm", p.position.y()},
                      {"z_mm", p.position.z()}});
  }
  return {{"source", set.source}, {"points", points}};
}

TargetSet load_target_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open target set " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
  return target_set_from_json(j);
}

std::vector<Vec3> positions(const TargetSet& set) {
  std::vector<Vec3> out;
  for (const auto& p : set.points) out.push_back(p.position);
  return out;
}

}  // namespace coilpilot::trajectory
