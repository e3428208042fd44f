#pragma once

// Balloon statics: clamped-plate deflection scaled to a two-film balloon,
// stacked into a chamber. Pressures are in kPa, lengths in mm; formulas work
// in N/mm^2 internally.

namespace coilpilot::mechanics {

inline constexpr double kKpaToNPerMm2 = 1e-3;
inline constexpr double kPlateCoefficient = 0.662;
inline constexpr double kBalloonCoefficient = 1.324;  // 2 x plate coefficient
inline constexpr double kDefaultPressureFloorKpa = 1.0;

struct BalloonSpec {
  double radius_a_mm = 4.0;
  double thickness_h_mm = 0.038;
  double youngs_e_n_per_mm2 = 13.4;  // modulus at 50 % strain
  double correction_c = 0.409;       // open-end correction, c < 1
  double stiction_pressure_kpa = 5.0;

  void validate() const;
};

struct StackSpec {
  BalloonSpec balloon;
  int n_balloons = 20;
  double deflated_length_mm = 25.0;

  void validate() const;
};

struct ChamberState {
  double pressure_kpa = 0.0;
  double length_mm = 0.0;
};

// The films of a fresh chamber stick together until the stiction pressure is
// overcome. That deadband applies only to the first inflation stroke.
enum class Stroke { kFirst, kSettled };

double effective_pressure(double pressure_kpa, const BalloonSpec& spec, Stroke stroke);

// Maximum displacement of a circumferentially clamped circular plate. No deadband.
double plate_deflection(double pressure_kpa, const BalloonSpec& spec);

double balloon_deflection(double pressure_kpa, const BalloonSpec& spec,
                          Stroke stroke = Stroke::kSettled);

double stack_length(double pressure_kpa, const StackSpec& spec, Stroke stroke = Stroke::kSettled);

ChamberState chamber_state(double pressure_kpa, const StackSpec& spec,
                           Stroke stroke = Stroke::kSettled);

// Closed-form inverse of stack_length. On the first stroke the result includes
// the stiction shift, so the deflated length maps to the deadband boundary.
// Throws kOutOfRange below the deflated length or above stack_length(p_max).
double pressure_from_length(double length_mm, const StackSpec& spec, double p_max_kpa,
                            Stroke stroke = Stroke::kSettled);

// d(length)/d(pressure) in mm/kPa. Diverges as the effective pressure goes to
// zero, so evaluation below `floor_kpa` throws kBelowFloor.
double length_pressure_derivative(double pressure_kpa, const StackSpec& spec,
                                  Stroke stroke = Stroke::kSettled,
                                  double floor_kpa = kDefaultPressureFloorKpa);

}  // namespace coilpilot::mechanics
