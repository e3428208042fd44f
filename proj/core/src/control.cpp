#include "coilpilot/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "coilpilot/error.hpp"

namespace coilpilot::control {

void ControllerConfig::validate() const {
  if (!(rate_k > 0.0 && rate_k < 1.0)) throw Error(ErrorCode::kConfig, "rate_k must lie in (0, 1)");
  if (!(error_threshold_mm > 0.0)) throw Error(ErrorCode::kConfig, "error threshold must be > 0");
  if (!(damping_lambda >= 0.0)) throw Error(ErrorCode::kConfig, "damping must be >= 0");
  if (max_iterations_per_goal < 1) throw Error(ErrorCode::kConfig, "max iterations must be >= 1");
  if (!(p_floor_kpa >= 0.0 && p_max_kpa > p_floor_kpa)) {
    throw Error(ErrorCode::kConfig, "pressure limits must satisfy 0 <= p_floor < p_max");
  }
  if (!(control_period_s > 0.0)) throw Error(ErrorCode::kConfig, "control period must be > 0");
}

std::string_view to_string(TraceStatus status) {
  switch (status) {
    case TraceStatus::kTracing: return "tracing";
    case TraceStatus::kGoalReached: return "goal-reached";
    case TraceStatus::kPathComplete: return "path-complete";
    case TraceStatus::kStalled: return "stalled";
  }
  return "unknown";
}

std::string_view to_string(GoalOutcome outcome) {
  switch (outcome) {
    case GoalOutcome::kReached: return "reached";
    case GoalOutcome::kStalled: return "stalled";
    case GoalOutcome::kUnreachable: return "unreachable";
  }
  return "unknown";
}

PressureVector clamp_pressures(const PressureVector& p, const ControllerConfig& cfg) {
  return p.cwiseMax(cfg.p_floor_kpa).cwiseMin(cfg.p_max_kpa);
}

double effective_damping(const Mat3& jacobian, const ControllerConfig& cfg) {
  const Vec3 sigma = kinematics::singular_values(jacobian);
  return sigma.minCoeff() < cfg.singular_threshold ? cfg.damping_lambda * cfg.damping_boost
                                                   : cfg.damping_lambda;
}

StepResult control_step(const TraceState& state, const Vec3& tip_measured, const Vec3& goal,
                        const Mat3& jacobian, const ControllerConfig& cfg) {
  StepResult out{state.current_pressures, state};
  const Vec3 e = goal - tip_measured;
  out.state.last_error = e;
  if (e.norm() < cfg.error_threshold_mm) {
    out.state.status = TraceStatus::kGoalReached;
    return out;
  }
  if (state.iterations_used >= cfg.max_iterations_per_goal) {
    out.state.status = TraceStatus::kStalled;
    return out;
  }
  const Mat3 pinv = kinematics::damped_pseudo_inverse(jacobian, effective_damping(jacobian, cfg));
  out.pressures = clamp_pressures(state.current_pressures + cfg.rate_k * (pinv * e), cfg);
  out.state.current_pressures = out.pressures;
  out.state.iterations_used = state.iterations_used + 1;
  out.state.status = TraceStatus::kTracing;
  return out;
}

void PlantConfig::validate() const {
  if (!(time_constant_s > 0.0)) throw Error(ErrorCode::kConfig, "plant tau must be > 0");
  if (!(slew_limit_kpa_per_s > 0.0)) throw Error(ErrorCode::kConfig, "slew limit must be > 0");
}

PressureVector plant_step(const PressureVector& commanded, const PressureVector& state, double dt_s,
                          const PlantConfig& plant) {
  if (!(dt_s > 0.0)) throw Error(ErrorCode::kOutOfRange, "dt must be > 0");
  const double tau = plant.time_constant_s;
  const double slew = plant.slew_limit_kpa_per_s;
  const double band = slew * tau;  // error above which the rate clamp is active
  PressureVector next = state;
  for (int i = 0; i < 3; ++i) {
    const double e = commanded[i] - state[i];
    if (e == 0.0) continue;
    const double sign = e > 0.0 ? 1.0 : -1.0;
    double p = state[i];
    double remaining = dt_s;
    if (std::abs(e) > band) {
      const double t_linear = (std::abs(e) - band) / slew;
      if (remaining <= t_linear) {
        next[i] = p + sign * slew * remaining;
        continue;
      }
      p = commanded[i] - sign * band;
      remaining -= t_linear;
    }
    next[i] = commanded[i] + (p - commanded[i]) * std::exp(-remaining / tau);
  }
  return next;
}

PressureVector PidPump::step(const PressureVector& commanded, const PressureVector& state,
                             double dt_s) {
  const Vec3 error = commanded - state;
  if (!primed_) {
    previous_error_ = error;
    primed_ = true;
  }
  integral_ += error * dt_s;
  const Vec3 derivative = (error - previous_error_) / dt_s;
  previous_error_ = error;
  Vec3 rate = cfg_.pid.kp * error + cfg_.pid.ki * integral_ + cfg_.pid.kd * derivative;
  rate = rate.cwiseMax(-cfg_.slew_limit_kpa_per_s).cwiseMin(cfg_.slew_limit_kpa_per_s);
  return state + rate * dt_s;
}

PathTracer::PathTracer(std::vector<Vec3> path, ControllerConfig cfg, const PressureVector& start,
                       std::vector<bool> reachable)
    : path_(std::move(path)), reachable_(std::move(reachable)), cfg_(cfg) {
  cfg_.validate();
  if (path_.empty()) throw Error(ErrorCode::kOutOfRange, "path must not be empty");
  if (reachable_.empty()) reachable_.assign(path_.size(), true);
  if (reachable_.size() != path_.size()) {
    throw Error(ErrorCode::kOutOfRange, "reachability mask does not match path length");
  }
  state_.current_pressures = clamp_pressures(start, cfg_);
  state_.goal_index = 0;
  if (!reachable_[0]) advance_goal();
}

void PathTracer::advance_goal() {
  std::size_t next = state_.goal_index + 1;
  while (next < path_.size() && !reachable_[next]) ++next;
  state_.iterations_used = 0;
  if (next >= path_.size()) {
    state_.status = TraceStatus::kPathComplete;
    return;
  }
  state_.goal_index = next;
  state_.status = TraceStatus::kTracing;
}

PathTracer::Tick PathTracer::tick(const Vec3& tip_measured, const JacobianFn& jacobian) {
  Tick out;
  out.command = state_.current_pressures;
  out.goal_index = state_.goal_index;
  if (done()) return out;

  const Vec3& goal = path_[state_.goal_index];
  const StepResult r =
      control_step(state_, tip_measured, goal, jacobian(state_.current_pressures), cfg_);
  out.error_norm = r.state.last_error.norm();
  state_.last_error = r.state.last_error;
  switch (r.state.status) {
    case TraceStatus::kGoalReached:
      out.goal_reached = true;
      advance_goal();
      break;
    case TraceStatus::kStalled:
      out.goal_stalled = true;
      advance_goal();
      break;
    default:
      state_ = r.state;
      out.command = r.pressures;
      out.updated = true;
      break;
  }
  return out;
}

ErrorSummary summarize_errors(std::vector<double> errors) {
  ErrorSummary s;
  s.count = errors.size();
  if (errors.empty()) return s;
  std::sort(errors.begin(), errors.end());
  const std::size_t mid = errors.size() / 2;
  s.median_mm = errors.size() % 2 == 1 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
  s.min_mm = errors.front();
  s.max_mm = errors.back();
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.mean_mm = sum / static_cast<double>(errors.size());
  return s;
}

std::vector<bool> reachable_goals(const std::vector<Vec3>& path, const kinematics::ActuatorSpec& spec,
                                  const kinematics::ChamberStrokes& strokes,
                                  const ControllerConfig& cfg, const WorkspaceCheck& check) {
  const int n = std::max(2, check.samples_per_axis);
  std::vector<Vec3> cloud;
  cloud.reserve(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const auto at = [&](int idx) {
          return cfg.p_floor_kpa + (cfg.p_max_kpa - cfg.p_floor_kpa) * idx / (n - 1);
        };
        cloud.push_back(kinematics::tip_from_pressures({at(i), at(j), at(k)}, spec, strokes).position);
      }
    }
  }
  std::vector<bool> out;
  out.reserve(path.size());
  const double tol2 = check.tolerance_mm * check.tolerance_mm;
  for (const Vec3& p : path) {
    bool ok = false;
    for (const Vec3& c : cloud) {
      if ((c - p).squaredNorm() <= tol2) {
        ok = true;
        break;
      }
    }
    out.push_back(ok);
  }
  return out;
}

TraceReport trace_path(const std::vector<Vec3>& path, const ControllerConfig& cfg, PlantHandle& plant,
                       const std::vector<bool>& reachable) {
  PathTracer tracer(path, cfg, plant.actual_pressures(), reachable);
  TraceReport report;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!tracer.reachable(i)) {
      report.goals.push_back({i, path[i], Vec3::Zero(), 0.0, 0, GoalOutcome::kUnreachable});
    }
  }
  const double t0 = plant.time_s();
  const auto jac = [&plant](const PressureVector& p) { return plant.jacobian(p); };
  int goal_iterations = 0;
  std::vector<double> reached_errors;

  while (!tracer.done()) {
    const Vec3 measured = plant.measured_tip();
    const Vec3 truth = plant.true_tip();
    const PathTracer::Tick tick = tracer.tick(measured, jac);

    TraceSample sample;
    sample.t_s = plant.time_s();
    sample.goal_index = tick.goal_index;
    sample.goal = path[tick.goal_index];
    sample.true_tip = truth;
    sample.measured_tip = measured;
    sample.measured_error_mm = tick.error_norm;
    sample.commanded = tick.command;
    sample.actual = plant.actual_pressures();
    sample.goal_reached = tick.goal_reached;
    sample.goal_stalled = tick.goal_stalled;

    if (tick.updated) {
      ++goal_iterations;
      ++report.total_iterations;
    }
    if (tick.goal_reached || tick.goal_stalled) {
      GoalRecord rec;
      rec.index = tick.goal_index;
      rec.goal = path[tick.goal_index];
      rec.achieved = truth;
      rec.error_mm = (truth - rec.goal).norm();
      rec.iterations = goal_iterations;
      rec.outcome = tick.goal_reached ? GoalOutcome::kReached : GoalOutcome::kStalled;
      if (tick.goal_reached) {
        reached_errors.push_back(rec.error_mm);
        sample.reached_error_mm = rec.error_mm;
      }
      report.goals.push_back(rec);
      goal_iterations = 0;
    }
    report.samples.push_back(sample);

    plant.command(tick.command);
    plant.advance(cfg.control_period_s);
  }
  std::sort(report.goals.begin(), report.goals.end(),
            [](const GoalRecord& a, const GoalRecord& b) { return a.index < b.index; });
  report.summary = summarize_errors(std::move(reached_errors));
  report.duration_s = plant.time_s() - t0;
  return report;
}

}  // namespace coilpilot::control
