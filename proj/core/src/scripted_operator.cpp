#include "coilpilot/scripted_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coilpilot/kinematics.hpp"

namespace coilpilot {

using nlohmann::json;
using protocol::Action;

ScriptedOperator::ScriptedOperator(const Config& cfg, int sites)
    : op_(cfg.scenarios.implant.operator_model),
      cfg_(cfg),
      sites_(sites),
      total_(sites * cfg.scenarios.implant.rounds) {}

protocol::Command ScriptedOperator::make(Action action, double t_s, json args) {
  protocol::Command c;
  c.action = action;
  c.sequence = sequence_++;
  c.sim_time = t_s;
  c.args = std::move(args);
  return c;
}

void ScriptedOperator::next_anchor(double t_s) {
  ++anchor_;
  stage_ = anchor_ >= total_ ? Stage::kDone : Stage::kLoad;
  stage_start_s_ = t_s;
  window_.clear();
}

std::vector<protocol::Command> ScriptedOperator::decide(const Observation& obs,
                                                        const std::vector<SessionEvent>& events) {
  std::vector<protocol::Command> out;
  bool path_finished = false;
  for (; seen_events_ < events.size(); ++seen_events_) {
    const auto& name = events[seen_events_].name;
    if (name == "goal-reached" || name == "stalled" || name == "path-complete") path_finished = true;
  }
  const double t = obs.t_s;
  const int site = anchor_ % sites_;

  if (stage_ != Stage::kDone && stage_ != Stage::kLoad && t - stage_start_s_ > op_.site_timeout_s) {
    // Give up on this anchor; the driver is reset before the next one.
    out.push_back(make(Action::kReset, t));
    next_anchor(t);
    return out;
  }

  switch (stage_) {
    case Stage::kLoad:
      out.push_back(make(Action::kLoadAnchor, t,
                         {{"medium", std::string(anchors::to_string(cfg_.scenarios.implant.medium))}}));
      out.push_back(make(Action::kCouple, t));
      out.push_back(make(Action::kEngagePath, t, {{"path_id", "circle24"}, {"site", site + 1}}));
      stage_ = Stage::kTracing;
      stage_start_s_ = t;
      break;
    case Stage::kTracing:
      if (path_finished) {
        out.push_back(make(Action::kManualOverride, t));
        stage_ = Stage::kAligning;
        last_jog_s_ = t;
        window_.clear();
      }
      break;
    case Stage::kAligning: {
      auto jogs = align(obs);
      out.insert(out.end(), jogs.begin(), jogs.end());
      break;
    }
    case Stage::kRotating:
      if (obs.phase == anchors::Phase::kReleased) {
        out.push_back(make(Action::kReleaseCheck, t));
        next_anchor(t);
      } else if (obs.contact_force_n >= op_.rotate_force_n) {
        out.push_back(make(Action::kRotateDriver, t, {{"dtheta_rad", op_.rotate_step_rad}}));
      }
      break;
    case Stage::kDone:
      break;
  }
  return out;
}

std::vector<protocol::Command> ScriptedOperator::align(const Observation& obs) {
  const double t = obs.t_s;
  window_.push_back({t, obs.measured_tip, obs.in_contact, obs.contact_force_n});
  const double cycle = 1.0 / cfg_.environment.target.frequency_hz;
  while (!window_.empty() && window_.front().t_s < t - cycle + 1e-9) window_.pop_front();
  if (t - last_jog_s_ < op_.settle_s + cycle - 1e-9) return {};

  Vec3 mean = Vec3::Zero();
  int n = 0;
  double min_force = std::numeric_limits<double>::infinity();
  bool touched = false;
  for (const auto& s : window_) {
    min_force = std::min(min_force, s.force_n);
    touched = touched || s.in_contact;
    mean += s.tip;
    ++n;
  }
  if (n == 0) return {};
  mean /= n;

  const Plane& rest = obs.surface_rest;
  const Vec3 normal = rest.normal.normalized();
  const Vec3 site = obs.sites_rest[static_cast<std::size_t>(anchor_ % sites_)];
  Vec3 lateral = site - mean;
  lateral -= lateral.dot(normal) * normal;
  const bool sustained = min_force >= op_.sustained_force_n;

  if (sustained && lateral.norm() <= op_.lateral_tolerance_mm) {
    stage_ = Stage::kRotating;
    return {};
  }

  Vec3 move = op_.lateral_gain * lateral;
  if (!sustained) move -= (touched ? op_.contact_advance_step_mm : op_.advance_step_mm) * normal;
  const Mat3 pinv = kinematics::damped_pseudo_inverse(obs.jacobian, cfg_.control.damping_lambda);
  const Vec3 dp = pinv * move;

  std::vector<protocol::Command> out;
  for (int i = 0; i < 3; ++i) {
    const double q = std::round(dp[i] / op_.jog_quantum_kpa) * op_.jog_quantum_kpa;
    if (q != 0.0) out.push_back(make(Action::kJog, t, {{"chamber", i + 1}, {"dp_kpa", q}}));
  }
  last_jog_s_ = t;
  window_.clear();
  return out;
}

}  // namespace coilpilot
