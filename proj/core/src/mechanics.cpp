#include "coilpilot/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coilpilot/error.hpp"

namespace coilpilot::mechanics {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidSpec, what);
}

// cbrt(a^4 / (E h)) * 1.324 c: the balloon deflection per cbrt(N/mm^2).
double balloon_gain(const BalloonSpec& s) {
  return kBalloonCoefficient * s.correction_c *
         std::cbrt(std::pow(s.radius_a_mm, 4) / (s.youngs_e_n_per_mm2 * s.thickness_h_mm));
}

void require_pressure(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::kOutOfRange, "pressure must be finite and >= 0, got " + std::to_string(p));
  }
}

}  // namespace

void BalloonSpec::validate() const {
  require(radius_a_mm > 0.0, "radius_a must be > 0");
  require(thickness_h_mm > 0.0, "thickness_h must be > 0");
  require(youngs_e_n_per_mm2 > 0.0, "youngs_E must be > 0");
  require(correction_c > 0.0 && correction_c < 1.0, "correction_c must lie in (0, 1)");
  require(stiction_pressure_kpa >= 0.0, "stiction_pressure must be >= 0");
}

void StackSpec::validate() const {
  balloon.validate();
  require(n_balloons >= 1, "n_balloons must be >= 1");
  require(deflated_length_mm >= 0.0, "deflated_length_l0 must be >= 0");
}

double effective_pressure(double pressure_kpa, const BalloonSpec& spec, Stroke stroke) {
  if (stroke == Stroke::kSettled) return pressure_kpa;
  return std::max(0.0, pressure_kpa - spec.stiction_pressure_kpa);
}

double plate_deflection(double pressure_kpa, const BalloonSpec& spec) {
  spec.validate();
  require_pressure(pressure_kpa);
  const double p = pressure_kpa * kKpaToNPerMm2;
  return kPlateCoefficient * spec.radius_a_mm *
         std::cbrt(p * spec.radius_a_mm / (spec.youngs_e_n_per_mm2 * spec.thickness_h_mm));
}

double balloon_deflection(double pressure_kpa, const BalloonSpec& spec, Stroke stroke) {
  spec.validate();
  require_pressure(pressure_kpa);
  const double p_eff = effective_pressure(pressure_kpa, spec, stroke) * kKpaToNPerMm2;
  return balloon_gain(spec) * std::cbrt(p_eff);
}

double stack_length(double pressure_kpa, const StackSpec& spec, Stroke stroke) {
  spec.validate();
  return spec.n_balloons * balloon_deflection(pressure_kpa, spec.balloon, stroke) +
         spec.deflated_length_mm;
}

ChamberState chamber_state(double pressure_kpa, const StackSpec& spec, Stroke stroke) {
  return {pressure_kpa, stack_length(pressure_kpa, spec, stroke)};
}

double pressure_from_length(double length_mm, const StackSpec& spec, double p_max_kpa,
                            Stroke stroke) {
  spec.validate();
  const double l0 = spec.deflated_length_mm;
  const double l_max = stack_length(p_max_kpa, spec, stroke);
  if (!(length_mm >= l0) || !(length_mm <= l_max)) {
    throw Error(ErrorCode::kOutOfRange, "length " + std::to_string(length_mm) + " mm outside [" +
                                            std::to_string(l0) + ", " + std::to_string(l_max) +
                                            "]");
  }
  const double per_balloon = (length_mm - l0) / (spec.n_balloons * balloon_gain(spec.balloon));
  const double p_eff_kpa = per_balloon * per_balloon * per_balloon / kKpaToNPerMm2;
  const double shift = stroke == Stroke::kFirst ? spec.balloon.stiction_pressure_kpa : 0.0;
  return p_eff_kpa + shift;
}

double length_pressure_derivative(double pressure_kpa, const StackSpec& spec, Stroke stroke,
                                  double floor_kpa) {
  spec.validate();
  const double p_eff = effective_pressure(pressure_kpa, spec.balloon, stroke);
  if (!(pressure_kpa >= floor_kpa) || !(p_eff >= floor_kpa)) {
    throw Error(ErrorCode::kBelowFloor, "derivative requested at " + std::to_string(pressure_kpa) +
                                            " kPa, floor is " + std::to_string(floor_kpa));
  }
  // d/dp [gain * cbrt(p * 1e-3)] = gain * cbrt(1e-3) / 3 * p^(-2/3)
  return spec.n_balloons * balloon_gain(spec.balloon) * std::cbrt(kKpaToNPerMm2) / 3.0 /
         std::cbrt(p_eff * p_eff);
}

}  // namespace coilpilot::mechanics
