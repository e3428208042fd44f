#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "coilpilot/config.hpp"
#include "coilpilot/protocol.hpp"
#include "coilpilot/session.hpp"

namespace coilpilot {

// Stand-in for the human at the cockpit during the implant procedure. Looks
// at what the cockpit shows (sensed tip, contact force, deployment phase,
// events) once per decision period and answers with commands.
//
// Per anchor: load and couple, engage the circle path toward the site's
// standoff target, take manual control, jog until the tip sits over the site
// with contact held through a whole motion cycle, then rotate the driver while
// the surface presses back until the anchor releases.
class ScriptedOperator {
 public:
  ScriptedOperator(const Config& cfg, int sites);

  bool done() const { return stage_ == Stage::kDone; }
  double decision_period_s() const { return op_.decision_period_s; }
  std::int64_t next_sequence() const { return sequence_; }

  std::vector<protocol::Command> decide(const Observation& obs, const std::vector<SessionEvent>& events);

 private:
  enum class Stage { kLoad, kTracing, kAligning, kRotating, kDone };
  struct Sample {
    double t_s;
    Vec3 tip;
    bool in_contact;
    double force_n;
  };

  protocol::Command make(protocol::Action action, double t_s, nlohmann::json args = nlohmann::json::object());
  void next_anchor(double t_s);
  std::vector<protocol::Command> align(const Observation& obs);

  OperatorConfig op_;
  Config cfg_;
  int sites_;
  int anchor_ = 0;
  int total_;
  Stage stage_ = Stage::kLoad;
  double stage_start_s_ = 0.0;
  double last_jog_s_ = 0.0;
  std::size_t seen_events_ = 0;
  std::int64_t sequence_ = 1;
  std::deque<Sample> window_;
};

}  // namespace coilpilot
