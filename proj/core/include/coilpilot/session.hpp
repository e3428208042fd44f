#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coilpilot/anchors.hpp"
#include "coilpilot/config.hpp"
#include "coilpilot/control.hpp"
#include "coilpilot/protocol.hpp"
#include "coilpilot/robot_sim.hpp"
#include "coilpilot/telemetry.hpp"

namespace coilpilot {

enum class SessionMode { kManual, kTracing, kPaused };
std::string_view to_string(SessionMode mode);

struct SessionEvent {
  double sim_time = 0.0;
  std::string name;
  nlohmann::json payload;
};

// Event or error produced by the session; the transport assigns sequences.
struct Outbound {
  std::string kind;  // "event" or "error"
  double sim_time = 0.0;
  nlohmann::json payload;
};

// What the operator can see on the cockpit.
struct Observation {
  double t_s = 0.0;
  SessionMode mode = SessionMode::kManual;
  Vec3 measured_tip = Vec3::Zero();
  bool in_contact = false;
  double contact_force_n = 0.0;
  anchors::Phase phase = anchors::Phase::kUnloaded;
  double torque_reading_nmm = 0.0;
  kinematics::PressureVector commanded = kinematics::PressureVector::Zero();
  Mat3 jacobian = Mat3::Zero();
  Plane surface_rest;
  std::vector<Vec3> sites_rest;
  std::size_t event_count = 0;
};

// One simulated procedure. Owns the robot, the motile target, the anchor
// driver and the path tracer; advanced one 5 ms tick at a time. Commands take
// effect on control ticks, in (due tick, arrival) order.
class Session {
 public:
  explicit Session(const Config& cfg, const std::string& telemetry_path = "");
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void submit(protocol::Command cmd);
  void step();
  void run_until_tick(std::int64_t end_tick);

  std::int64_t tick() const { return sim_.tick(); }
  double time_s() const { return sim_.time_s(); }
  std::int64_t control_every() const { return control_every_; }
  std::int64_t tick_for_time(double t_s) const;
  bool is_control_tick() const { return tick() % control_every_ == 0; }
  // True when the last step() crossed a state-broadcast instant.
  bool broadcast_due() const { return broadcast_due_; }

  nlohmann::json state_payload() const;
  std::vector<Outbound> take_outbound();
  const std::vector<SessionEvent>& events() const { return events_; }
  Observation observe() const;
  SessionMode mode() const { return mode_; }
  const RobotSim& robot() const { return sim_; }
  const anchors::DeploymentState& deployment() const { return deploy_; }
  const std::vector<environment::AnchorSite>& sites() const { return sites_; }
  const std::vector<Vec3>& standoff_targets() const { return standoff_; }
  std::size_t pending_commands() const { return pending_.size(); }
  std::size_t telemetry_rows() const;

  // Closes the telemetry file (trailer line). Idempotent.
  void finish();

  static std::vector<std::string> telemetry_columns();

 private:
  struct Pending {
    std::int64_t due_tick;
    protocol::Command cmd;
  };

  void control_tick();
  void apply(const protocol::Command& cmd);
  void engage(const protocol::Command& cmd);
  void tracer_tick();
  void emit(const std::string& name, nlohmann::json payload);
  void error(std::string_view code, const std::string& message,
             std::optional<std::int64_t> in_reply_to);
  void write_row();
  double torque_reading(double torque_nmm) const;
  Plane surface_now() const;
  std::size_t nearest_site(const Vec2& uv) const;

  Config cfg_;
  RobotSim sim_;
  std::int64_t control_every_ = 4;
  anchors::TorqueSensor torque_sensor_;
  anchors::SensorSession torque_session_;
  anchors::Medium medium_;
  anchors::DeploymentState deploy_;
  SessionMode mode_ = SessionMode::kManual;
  SessionMode mode_before_pause_ = SessionMode::kManual;
  std::optional<control::PathTracer> tracer_;
  std::string path_id_;
  std::vector<environment::AnchorSite> sites_;
  std::vector<Vec3> standoff_;
  std::optional<std::vector<Vec3>> annulus_;
  std::vector<Pending> pending_;
  std::optional<std::int64_t> last_sequence_;
  std::vector<Outbound> outbound_;
  std::vector<SessionEvent> events_;
  std::unique_ptr<telemetry::CsvWriter> writer_;
  std::string row_commands_;
  std::string row_events_;
  bool broadcast_due_ = false;
};

// Reads an NDJSON command log; blank lines are skipped.
std::vector<protocol::Command> load_command_log(const std::string& path);

}  // namespace coilpilot
