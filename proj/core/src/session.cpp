#include "coilpilot/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "coilpilot/error.hpp"
#include "coilpilot/trajectory.hpp"

namespace coilpilot {

using nlohmann::json;
using protocol::Action;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

RobotSimConfig robot_config(const Config& cfg) {
  RobotSimConfig rc;
  rc.actuator = cfg.actuator;
  rc.plant = cfg.plant;
  rc.sensor = cfg.environment.sensor;
  rc.step_s = cfg.session.step_s;
  rc.primed = cfg.session.primed;
  rc.initial_kpa = cfg.session.initial_kpa;
  rc.target = cfg.environment.target;
  rc.contact_stiffness_n_per_mm = cfg.environment.contact_stiffness_n_per_mm;
  return rc;
}

std::int64_t broadcast_index(std::int64_t tick, const SessionConfig& s) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(tick) * s.step_s * s.broadcast_hz + 1e-9));
}

void append(std::string& list, const std::string& item) {
  if (!list.empty()) list += ';';
  list += item;
}

}  // namespace

std::string_view to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::kManual: return "manual";
    case SessionMode::kTracing: return "tracing";
    case SessionMode::kPaused: return "paused";
  }
  return "unknown";
}

Session::Session(const Config& cfg, const std::string& telemetry_path)
    : cfg_(cfg),
      sim_(robot_config(cfg)),
      torque_sensor_(cfg.anchors.torque_sensor),
      torque_session_(anchors::draw_session(cfg.anchors.torque_sensor, cfg.seed, 0)),
      medium_(cfg.scenarios.implant.medium) {
  cfg_.validate();
  control_every_ = std::llround(cfg_.control.control_period_s / cfg_.session.step_s);

  const Plane& rest = cfg_.environment.target.base_pose;
  sites_ = cfg_.environment.target.anchor_sites;
  if (sites_.empty()) {
    const auto circle =
        trajectory::circular_sites(cfg_.trajectory.circle_radius_mm, cfg_.trajectory.circle_sites, rest);
    for (const auto& p : circle.points) sites_.push_back({p.label, rest.to_surface(p.position)});
  }
  trajectory::TargetSet world;
  for (const auto& s : sites_) world.points.push_back({s.label, rest.to_world(s.uv)});
  for (const auto& p : trajectory::project_standoff(world, rest, cfg_.trajectory.standoff_mm).points) {
    standoff_.push_back(p.position);
  }
  if (!telemetry_path.empty()) {
    writer_ = std::make_unique<telemetry::CsvWriter>(telemetry_path, telemetry_columns());
  }
}

Session::~Session() {
  try {
    finish();
  } catch (...) {
  }
}

std::vector<std::string> Session::telemetry_columns() {
  return {"t_s",         "mode",        "goal_index",   "goal_x_mm",        "goal_y_mm",
          "goal_z_mm",   "tip_x_mm",    "tip_y_mm",     "tip_z_mm",         "meas_x_mm",
          "meas_y_mm",   "meas_z_mm",   "p_cmd_1_kpa",  "p_cmd_2_kpa",      "p_cmd_3_kpa",
          "p_act_1_kpa", "p_act_2_kpa", "p_act_3_kpa",  "surface_disp_mm",  "in_contact",
          "penetration_mm", "force_n",  "phase",        "depth_mm",         "target_depth_mm",
          "rotation_rad", "driver_torque_nmm", "torque_reading_nmm", "site", "site_u_mm",
          "site_v_mm",   "tip_u_mm",    "tip_v_mm",     "commands",         "events"};
}

std::size_t Session::telemetry_rows() const { return writer_ ? writer_->rows() : 0; }

void Session::finish() {
  if (writer_) writer_->close();
}

std::int64_t Session::tick_for_time(double t_s) const {
  const double index = std::ceil(t_s / cfg_.control.control_period_s - 1e-6);
  return static_cast<std::int64_t>(std::max(0.0, index)) * control_every_;
}

void Session::submit(protocol::Command cmd) {
  std::int64_t due = 0;
  if (cmd.sim_time) {
    due = tick_for_time(*cmd.sim_time);
  } else {
    due = (tick() + control_every_ - 1) / control_every_ * control_every_;
  }
  const auto at = std::upper_bound(pending_.begin(), pending_.end(), due,
                                   [](std::int64_t d, const Pending& p) { return d < p.due_tick; });
  pending_.insert(at, Pending{due, std::move(cmd)});
}

void Session::step() {
  if (is_control_tick()) control_tick();
  const std::int64_t before = broadcast_index(tick(), cfg_.session);
  sim_.step();
  broadcast_due_ = broadcast_index(tick(), cfg_.session) != before;
}

void Session::run_until_tick(std::int64_t end_tick) {
  while (tick() < end_tick) step();
}

void Session::control_tick() {
  std::size_t applied = 0;
  while (applied < pending_.size() && pending_[applied].due_tick <= tick()) {
    apply(pending_[applied].cmd);
    ++applied;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(applied));
  if (mode_ == SessionMode::kTracing) tracer_tick();
  write_row();
  row_commands_.clear();
  row_events_.clear();
}

void Session::emit(const std::string& name, json payload) {
  payload["event"] = name;
  events_.push_back({time_s(), name, payload});
  outbound_.push_back({"event", time_s(), std::move(payload)});
  append(row_events_, name);
}

void Session::error(std::string_view code, const std::string& message,
                    std::optional<std::int64_t> in_reply_to) {
  json payload = {{"code", std::string(code)}, {"message", message}};
  if (in_reply_to) payload["in_reply_to"] = *in_reply_to;
  outbound_.push_back({"error", time_s(), std::move(payload)});
}

std::vector<Outbound> Session::take_outbound() {
  std::vector<Outbound> out;
  out.swap(outbound_);
  return out;
}

Plane Session::surface_now() const { return *sim_.surface(); }

std::size_t Session::nearest_site(const Vec2& uv) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sites_.size(); ++i) {
    if ((sites_[i].uv - uv).norm() < (sites_[best].uv - uv).norm()) best = i;
  }
  return best;
}

double Session::torque_reading(double torque_nmm) const {
  const double limit = cfg_.anchors.torque_sensor.calibration_max_torque_nmm;
  return torque_sensor_.read(std::min(torque_nmm, limit), torque_session_);
}

void Session::apply(const protocol::Command& cmd) {
  const std::string tag =
      (cmd.sequence ? std::to_string(*cmd.sequence) : std::string("-")) + ":" +
      std::string(protocol::to_string(cmd.action));
  if (cmd.sequence && last_sequence_ && *cmd.sequence <= *last_sequence_) {
    error("protocol", "sequence " + std::to_string(*cmd.sequence) + " does not increase",
          cmd.sequence);
    append(row_commands_, tag + "!");
    return;
  }
  if (cmd.sequence) last_sequence_ = cmd.sequence;

  try {
    switch (cmd.action) {
      case Action::kLoadAnchor: {
        const anchors::Medium medium =
            cmd.args.contains("medium")
                ? anchors::medium_from_string(cmd.args.at("medium").get<std::string>())
                : cfg_.scenarios.implant.medium;
        deploy_ = anchors::load_anchor(deploy_, cfg_.anchors.anchor, cfg_.anchors.medium(medium));
        medium_ = medium;
        break;
      }
      case Action::kCouple:
        deploy_ = anchors::couple(deploy_);
        break;
      case Action::kJog: {
        if (mode_ != SessionMode::kManual) {
          throw Error(ErrorCode::kProtocol, "jog needs manual mode (now " +
                                                std::string(to_string(mode_)) + ")");
        }
        kinematics::PressureVector p = sim_.commanded_pressures();
        const int chamber = cmd.args.at("chamber").get<int>();
        p[chamber - 1] += cmd.args.at("dp_kpa").get<double>();
        sim_.command(p);
        break;
      }
      case Action::kEngagePath:
        engage(cmd);
        break;
      case Action::kPause:
        if (mode_ == SessionMode::kPaused) {
          mode_ = mode_before_pause_;
        } else {
          mode_before_pause_ = mode_;
          mode_ = SessionMode::kPaused;
        }
        break;
      case Action::kManualOverride:
        tracer_.reset();
        mode_ = SessionMode::kManual;
        break;
      case Action::kRotateDriver: {
        const auto& contact = sim_.contact();
        const auto r = anchors::rotate_driver(deploy_, cmd.args.at("dtheta_rad").get<double>(),
                                              contact.in_contact, contact.normal_force_n,
                                              cfg_.anchors.medium(medium_), cfg_.anchors.anchor,
                                              cfg_.anchors.deployment);
        deploy_ = r.state;
        if (r.status == anchors::RotateStatus::kReleased) {
          const Plane surface = surface_now();
          const Vec2 tip_uv = surface.to_surface(sim_.true_tip());
          const std::size_t site = nearest_site(tip_uv);
          emit("anchor-released",
               {{"site", sites_[site].label},
                {"lateral_error_mm", (tip_uv - sites_[site].uv).norm()},
                {"depth_mm", deploy_.depth_mm},
                {"release_torque_nmm", deploy_.release_torque_nmm},
                {"torque_reading_nmm", torque_reading(deploy_.release_torque_nmm)}});
        }
        break;
      }
      case Action::kReleaseCheck:
        emit("release-check", {{"released", deploy_.phase == anchors::Phase::kReleased},
                               {"phase", std::string(anchors::to_string(deploy_.phase))},
                               {"torque_reading_nmm", torque_reading(deploy_.driver_torque_nmm)}});
        break;
      case Action::kReset:
        tracer_.reset();
        mode_ = SessionMode::kManual;
        deploy_ = {};
        sim_.command(cfg_.session.initial_kpa);
        emit("reset", json::object());
        break;
    }
    append(row_commands_, tag);
  } catch (const Error& e) {
    error(to_string(e.code()), e.what(), cmd.sequence);
    append(row_commands_, tag + "!");
  }
}

void Session::engage(const protocol::Command& cmd) {
  const std::string path_id = cmd.args.at("path_id").get<std::string>();
  std::vector<Vec3> path;
  if (path_id == "annulus") {
    if (!annulus_) {
      const auto set = trajectory::load_target_set(
          resolve_data_path(cfg_, cfg_.trajectory.annulus_file));
      annulus_ = trajectory::discretize(trajectory::spline_path(set),
                                        cfg_.trajectory.discretize_points)
                     .points;
    }
    path = *annulus_;
  } else if (cmd.args.contains("site")) {
    const auto site = static_cast<std::size_t>(cmd.args.at("site").get<int>());
    if (site > standoff_.size()) {
      throw Error(ErrorCode::kProtocol, "site " + std::to_string(site) + " out of range (1.." +
                                            std::to_string(standoff_.size()) + ")");
    }
    path = {standoff_[site - 1]};
  } else {
    path = standoff_;
  }
  const auto reachable = control::reachable_goals(
      path, cfg_.actuator, sim_.strokes(), cfg_.control,
      {cfg_.scenarios.path_trace.workspace_samples_per_axis,
       cfg_.scenarios.path_trace.workspace_tolerance_mm});
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!reachable[i]) emit("unreachable", {{"path_id", path_id}, {"goal_index", i}});
  }
  tracer_.emplace(path, cfg_.control, sim_.commanded_pressures(), reachable);
  path_id_ = path_id;
  mode_ = SessionMode::kTracing;
  if (tracer_->done()) {
    tracer_.reset();
    mode_ = SessionMode::kManual;
    emit("path-complete", {{"path_id", path_id}});
  }
}

void Session::tracer_tick() {
  const auto jac = [this](const kinematics::PressureVector& p) { return sim_.jacobian(p); };
  const auto t = tracer_->tick(sim_.measured_tip(), jac);
  if (t.updated) sim_.command(t.command);
  const Vec3& goal = tracer_->path()[t.goal_index];
  if (t.goal_reached || t.goal_stalled) {
    emit(t.goal_reached ? "goal-reached" : "stalled",
         {{"path_id", path_id_},
          {"goal_index", t.goal_index},
          {"measured_error_mm", t.error_norm},
          {"true_error_mm", (sim_.true_tip() - goal).norm()}});
  }
  if (tracer_->done()) {
    emit("path-complete", {{"path_id", path_id_}});
    tracer_.reset();
    mode_ = SessionMode::kManual;
  }
}

void Session::write_row() {
  if (!writer_) return;
  const Plane surface = surface_now();
  const auto& contact = sim_.contact();
  const Vec2 tip_uv = surface.to_surface(sim_.true_tip());
  const std::size_t site = nearest_site(tip_uv);
  const bool has_goal = tracer_ && !tracer_->done();
  const Vec3 goal = has_goal ? tracer_->path()[tracer_->state().goal_index] : Vec3::Zero();

  telemetry::CsvRow row;
  row << time_s() << to_string(mode_)
      << (has_goal ? static_cast<std::int64_t>(tracer_->state().goal_index) : std::int64_t{-1})
      << goal.x() << goal.y() << goal.z();
  const Vec3 tip = sim_.true_tip();
  const Vec3 meas = sim_.measured_tip();
  row << tip.x() << tip.y() << tip.z() << meas.x() << meas.y() << meas.z();
  for (int i = 0; i < 3; ++i) row << sim_.commanded_pressures()[i];
  for (int i = 0; i < 3; ++i) row << sim_.actual_pressures()[i];
  row << environment::displacement_at(time_s(), cfg_.environment.target) << contact.in_contact
      << contact.penetration_mm << contact.normal_force_n << anchors::to_string(deploy_.phase)
      << deploy_.depth_mm << cfg_.anchors.anchor.target_depth_mm << deploy_.total_rotation_rad
      << deploy_.driver_torque_nmm << torque_reading(deploy_.driver_torque_nmm)
      << sites_[site].label << sites_[site].uv.x() << sites_[site].uv.y() << tip_uv.x()
      << tip_uv.y() << row_commands_ << row_events_;
  writer_->write(row);
}

json Session::state_payload() const {
  const Plane surface = surface_now();
  const auto& contact = sim_.contact();
  const Vec3 tip = sim_.true_tip();

  // The backbone comes from the free arc; contact compliance is spread
  // linearly along it so the polyline still ends at the constrained tip.
  std::vector<Vec3> backbone = kinematics::backbone_polyline(sim_.arc(), cfg_.session.backbone_points);
  const Vec3 shift = tip - sim_.free_tip().position;
  json polyline = json::array();
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(backbone.size() - 1);
    polyline.push_back(vec(i + 1 == backbone.size() ? tip : Vec3(backbone[i] + w * shift)));
  }
  json sites = json::array();
  json standoff = json::array();
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    sites.push_back({{"label", sites_[i].label}, {"position", vec(surface.to_world(sites_[i].uv))}});
    standoff.push_back({{"label", sites_[i].label}, {"position", vec(standoff_[i])}});
  }
  json goal = nullptr;
  if (tracer_ && !tracer_->done()) {
    goal = {{"path_id", path_id_},
            {"index", tracer_->state().goal_index},
            {"position", vec(tracer_->path()[tracer_->state().goal_index])}};
  }
  return {
      {"mode", std::string(to_string(mode_))},
      {"tick", tick()},
      {"tip", {{"position", vec(tip)}, {"tangent", vec(sim_.free_tip().tangent)}}},
      {"measured_tip", vec(sim_.measured_tip())},
      {"backbone", polyline},
      {"pressures",
       {{"commanded", vec(sim_.commanded_pressures())}, {"actual", vec(sim_.actual_pressures())}}},
      {"surface",
       {{"origin", vec(surface.origin)},
        {"normal", vec(surface.normal)},
        {"displacement_mm", environment::displacement_at(time_s(), cfg_.environment.target)}}},
      {"anchor_sites", sites},
      {"standoff_targets", standoff},
      {"goal", goal},
      {"deployment",
       {{"phase", std::string(anchors::to_string(deploy_.phase))},
        {"depth_mm", deploy_.depth_mm},
        {"rotation_rad", deploy_.total_rotation_rad}}},
      {"torque_reading_nmm", torque_reading(deploy_.driver_torque_nmm)},
      {"contact",
       {{"in_contact", contact.in_contact},
        {"force_n", contact.normal_force_n},
        {"penetration_mm", contact.penetration_mm}}},
      {"last_sequence", last_sequence_ ? json(*last_sequence_) : json(nullptr)},
  };
}

Observation Session::observe() const {
  Observation o;
  o.t_s = time_s();
  o.mode = mode_;
  o.measured_tip = sim_.measured_tip();
  o.in_contact = sim_.contact().in_contact;
  o.contact_force_n = sim_.contact().normal_force_n;
  o.phase = deploy_.phase;
  o.torque_reading_nmm = torque_reading(deploy_.driver_torque_nmm);
  o.commanded = sim_.commanded_pressures();
  o.jacobian = sim_.jacobian(o.commanded.cwiseMax(cfg_.control.p_floor_kpa + 1.0));
  o.surface_rest = cfg_.environment.target.base_pose;
  for (const auto& s : sites_) o.sites_rest.push_back(o.surface_rest.to_world(s.uv));
  o.event_count = events_.size();
  return o;
}

std::vector<protocol::Command> load_command_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open command log " + path);
  std::vector<protocol::Command> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(protocol::parse_command_line(line));
  }
  return out;
}

}  // namespace coilpilot
