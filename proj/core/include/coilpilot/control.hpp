#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "coilpilot/kinematics.hpp"

namespace coilpilot::control {

using kinematics::PressureVector;

struct ControllerConfig {
  double rate_k = 0.1;
  double error_threshold_mm = 0.5;
  double damping_lambda = 1e-3;
  int max_iterations_per_goal = 400;
  double p_floor_kpa = mechanics::kDefaultPressureFloorKpa;
  double p_max_kpa = 100.0;
  double control_period_s = 0.02;
  // Damping is multiplied by damping_boost when the smallest singular value of
  // J falls below singular_threshold.
  double singular_threshold = 1e-4;
  double damping_boost = 10.0;

  void validate() const;
};

enum class TraceStatus { kTracing, kGoalReached, kPathComplete, kStalled };
std::string_view to_string(TraceStatus status);

struct TraceState {
  std::size_t goal_index = 0;
  PressureVector current_pressures = PressureVector::Zero();
  Vec3 last_error = Vec3::Zero();
  int iterations_used = 0;
  TraceStatus status = TraceStatus::kTracing;
};

struct StepResult {
  PressureVector pressures;
  TraceState state;
};

PressureVector clamp_pressures(const PressureVector& p, const ControllerConfig& cfg);

double effective_damping(const Mat3& jacobian, const ControllerConfig& cfg);

// One resolved-rate update toward a single goal: P + k J^+ e, clamped.
StepResult control_step(const TraceState& state, const Vec3& tip_measured, const Vec3& goal,
                        const Mat3& jacobian, const ControllerConfig& cfg);

// Inner pressure loop standing in for the syringe-pump PID.
enum class PlantModel { kFirstOrderLag, kPid };

struct PidGains {
  double kp = 10.0;  // (kPa/s) per kPa of error
  double ki = 0.0;
  double kd = 0.0;
};

struct PlantConfig {
  PlantModel model = PlantModel::kFirstOrderLag;
  double time_constant_s = 0.1;
  double slew_limit_kpa_per_s = 40.0;
  PidGains pid;

  void validate() const;
};

// First-order lag with rate clamp, integrated exactly over dt.
PressureVector plant_step(const PressureVector& commanded, const PressureVector& state, double dt_s,
                          const PlantConfig& plant);

// Pump driven by a PID on the pressure error; flow (pressure rate) is
// limited to the slew rate. Only used when PlantConfig::model is kPid.
class PidPump {
 public:
  explicit PidPump(PlantConfig cfg) : cfg_(cfg) {}
  PressureVector step(const PressureVector& commanded, const PressureVector& state, double dt_s);

 private:
  PlantConfig cfg_;
  Vec3 integral_ = Vec3::Zero();
  Vec3 previous_error_ = Vec3::Zero();
  bool primed_ = false;
};

// Resolved-rate path tracing, one control period at a time. The path bookkeeping (goal
// advance, unreachable and stalled goals) lives here; the numeric update is
// control_step.
class PathTracer {
 public:
  using JacobianFn = std::function<Mat3(const PressureVector&)>;

  struct Tick {
    PressureVector command;
    std::size_t goal_index = 0;
    double error_norm = 0.0;
    bool goal_reached = false;  // goal_index was reached on this tick
    bool goal_stalled = false;  // goal_index was abandoned on this tick
    bool updated = false;       // pressures changed on this tick
  };

  PathTracer(std::vector<Vec3> path, ControllerConfig cfg, const PressureVector& start,
             std::vector<bool> reachable = {});

  Tick tick(const Vec3& tip_measured, const JacobianFn& jacobian);

  bool done() const { return state_.status == TraceStatus::kPathComplete; }
  const TraceState& state() const { return state_; }
  const std::vector<Vec3>& path() const { return path_; }
  bool reachable(std::size_t i) const { return reachable_[i]; }

 private:
  void advance_goal();

  std::vector<Vec3> path_;
  std::vector<bool> reachable_;
  ControllerConfig cfg_;
  TraceState state_;
};

// What the path tracer needs from the simulated robot.
class PlantHandle {
 public:
  virtual ~PlantHandle() = default;
  virtual double time_s() const = 0;
  virtual PressureVector actual_pressures() const = 0;
  virtual void command(const PressureVector& pressures) = 0;
  virtual void advance(double duration_s) = 0;
  virtual Vec3 measured_tip() const = 0;
  virtual Vec3 true_tip() const = 0;
  virtual Mat3 jacobian(const PressureVector& pressures) const = 0;
};

enum class GoalOutcome { kReached, kStalled, kUnreachable };
std::string_view to_string(GoalOutcome outcome);

struct GoalRecord {
  std::size_t index = 0;
  Vec3 goal = Vec3::Zero();
  Vec3 achieved = Vec3::Zero();  // true tip when the goal was reached
  double error_mm = 0.0;         // |achieved - goal|
  int iterations = 0;
  GoalOutcome outcome = GoalOutcome::kReached;
};

struct TraceSample {
  double t_s = 0.0;
  std::size_t goal_index = 0;
  Vec3 goal = Vec3::Zero();
  Vec3 true_tip = Vec3::Zero();
  Vec3 measured_tip = Vec3::Zero();
  double measured_error_mm = 0.0;
  PressureVector commanded = PressureVector::Zero();
  PressureVector actual = PressureVector::Zero();
  bool goal_reached = false;
  bool goal_stalled = false;
  double reached_error_mm = 0.0;  // valid when goal_reached
};

struct ErrorSummary {
  std::size_t count = 0;
  double median_mm = 0.0;
  double mean_mm = 0.0;
  double min_mm = 0.0;
  double max_mm = 0.0;
};

ErrorSummary summarize_errors(std::vector<double> errors);

struct TraceReport {
  std::vector<GoalRecord> goals;
  std::vector<TraceSample> samples;
  ErrorSummary summary;  // over reached goals
  int total_iterations = 0;
  double duration_s = 0.0;
};

struct WorkspaceCheck {
  int samples_per_axis = 16;
  double tolerance_mm = 3.0;
};

// Coarse workspace test: a point is reachable when some sampled pressure
// triple puts the tip within tolerance of it.
std::vector<bool> reachable_goals(const std::vector<Vec3>& path, const kinematics::ActuatorSpec& spec,
                                  const kinematics::ChamberStrokes& strokes,
                                  const ControllerConfig& cfg, const WorkspaceCheck& check = {});

// Runs the path tracer over the whole path against a simulated plant. Always
// terminates: each goal gets at most max_iterations_per_goal updates.
TraceReport trace_path(const std::vector<Vec3>& path, const ControllerConfig& cfg, PlantHandle& plant,
                       const std::vector<bool>& reachable = {});

}  // namespace coilpilot::control
