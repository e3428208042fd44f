#include "coilpilot/scenarios.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "coilpilot/anchors.hpp"
#include "coilpilot/error.hpp"
#include "coilpilot/mechanics.hpp"
#include "coilpilot/replay.hpp"
#include "coilpilot/robot_sim.hpp"
#include "coilpilot/scripted_operator.hpp"
#include "coilpilot/session.hpp"
#include "coilpilot/telemetry.hpp"
#include "coilpilot/trajectory.hpp"

namespace coilpilot {

namespace fs = std::filesystem;
using nlohmann::json;
using replay::Schema;
using telemetry::CsvRow;
using telemetry::CsvWriter;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void mechanics_sweep(const Config& cfg, const fs::path& out, ScenarioResult& result) {
  const auto& sc = cfg.scenarios.mechanics_sweep;
  const auto ref = telemetry::read_plain_csv(resolve_data_path(cfg, sc.reference_file));
  const auto pc = ref.column("pressure_kpa");
  const auto dc = ref.column("displacement_mm");
  const auto cc = ref.column("chamber_id");
  {
    CsvWriter w((out / "telemetry.csv").string(), replay::columns(Schema::kMechanicsSweep));
    for (std::size_t r = 0; r < ref.rows.size(); ++r) {
      const int chamber = static_cast<int>(ref.number(r, cc));
      if (chamber < 1 || chamber > 3) throw Error(ErrorCode::kSchemaMismatch, "chamber_id must be 1..3");
      const auto& stack = cfg.actuator.stacks[static_cast<std::size_t>(chamber - 1)];
      const double p = ref.number(r, pc);
      const double model =
          mechanics::stack_length(p, stack, mechanics::Stroke::kFirst) - stack.deflated_length_mm;
      const double measured = ref.number(r, dc);
      CsvRow row;
      row << chamber << p << measured << model << std::abs(model - measured) << (p >= sc.p_min_kpa);
      w.write(row);
    }
  }
  CsvWriter curve((out / "model_curve.csv").string(),
                  {"chamber_id", "pressure_kpa", "length_mm", "displacement_mm"});
  for (int c = 0; c < 3; ++c) {
    const auto& stack = cfg.actuator.stacks[static_cast<std::size_t>(c)];
    const int n = static_cast<int>(std::floor(cfg.actuator.p_max_kpa / sc.curve_step_kpa + 1e-9));
    for (int i = 0; i <= n; ++i) {
      const double p = i * sc.curve_step_kpa;
      const double l = mechanics::stack_length(p, stack, mechanics::Stroke::kFirst);
      CsvRow row;
      row << c + 1 << p << l << l - stack.deflated_length_mm;
      curve.write(row);
    }
  }
  curve.close();
  result.files.push_back("model_curve.csv");
}

void contact_test(const Config& cfg, const fs::path& out, ScenarioResult&) {
  const auto& sc = cfg.scenarios.contact_test;
  CsvWriter w((out / "telemetry.csv").string(), replay::columns(Schema::kContactTest));
  const auto& stack = cfg.actuator.stacks[0];
  const double amplitude = cfg.environment.target.amplitude_mm;
  const double f = cfg.environment.target.frequency_hz;
  const double l0 = stack.deflated_length_mm;
  const Vec3 mean_point(0.0, 0.0, l0 + sc.surface_distance_mm);

  struct Case {
    const char* name;
    double tilt_rad;
  };
  for (const Case& c : {Case{"vertical", 0.0}, Case{"tilted", sc.tilt_deg * kPi / 180.0}}) {
    // The robot frame is the reference: a tilted approach axis shows up as a
    // surface normal tilted away from the robot axis.
    RobotSimConfig rc;
    rc.actuator = cfg.actuator;
    rc.plant = cfg.plant;
    rc.sensor = cfg.environment.sensor;
    rc.step_s = cfg.session.step_s;
    rc.primed = false;
    rc.initial_kpa = kinematics::PressureVector::Zero();
    environment::MotileTarget target = cfg.environment.target;
    target.anchor_sites.clear();
    const Vec3 normal(-std::sin(c.tilt_rad), 0.0, -std::cos(c.tilt_rad));
    target.base_pose = Plane{mean_point - 0.5 * amplitude * normal, normal};
    rc.target = target;
    rc.contact_stiffness_n_per_mm = cfg.environment.contact_stiffness_n_per_mm;
    RobotSim sim(rc);

    const double hold = mechanics::pressure_from_length(l0 + sc.surface_distance_mm + sc.overtravel_mm,
                                                        stack, cfg.actuator.p_max_kpa,
                                                        mechanics::Stroke::kFirst);
    sim.command(kinematics::PressureVector::Constant(hold));
    const auto steps = std::llround(sc.duration_s / cfg.session.step_s);
    const double settle = sc.duration_s - sc.evaluate_cycles / f;
    for (std::int64_t k = 0; k <= steps; ++k) {
      const double t = sim.time_s();
      const int cycle = t + 1e-9 >= settle && k < steps
                            ? static_cast<int>(std::floor((t - settle) * f + 1e-9))
                            : -1;
      const auto& contact = sim.contact();
      CsvRow row;
      row << c.name << t << cycle << environment::displacement_at(t, target)
          << contact.penetration_mm << contact.normal_force_n << contact.in_contact;
      w.write(row);
      if (k < steps) sim.step();
    }
  }
}

void path_trace(const Config& cfg, const fs::path& out, ScenarioResult&) {
  const auto set = trajectory::load_target_set(resolve_data_path(cfg, cfg.trajectory.annulus_file));
  const auto path =
      trajectory::discretize(trajectory::spline_path(set), cfg.trajectory.discretize_points).points;
  RobotSimConfig rc;
  rc.actuator = cfg.actuator;
  rc.plant = cfg.plant;
  rc.sensor = cfg.environment.sensor;
  rc.step_s = cfg.session.step_s;
  rc.primed = cfg.session.primed;
  rc.initial_kpa = cfg.session.initial_kpa;
  RobotSim sim(rc);
  const auto& pt = cfg.scenarios.path_trace;
  const auto reachable = control::reachable_goals(path, cfg.actuator, sim.strokes(), cfg.control,
                                                  {pt.workspace_samples_per_axis, pt.workspace_tolerance_mm});
  const auto report = control::trace_path(path, cfg.control, sim, reachable);

  CsvWriter w((out / "telemetry.csv").string(), replay::columns(Schema::kPathTrace));
  const auto put = [&](const control::TraceSample& s, const char* event) {
    CsvRow row;
    row << s.t_s << static_cast<std::int64_t>(s.goal_index) << s.goal.x() << s.goal.y() << s.goal.z()
        << s.true_tip.x() << s.true_tip.y() << s.true_tip.z() << s.measured_tip.x()
        << s.measured_tip.y() << s.measured_tip.z() << s.measured_error_mm;
    for (int i = 0; i < 3; ++i) row << s.commanded[i];
    for (int i = 0; i < 3; ++i) row << s.actual[i];
    row << event;
    w.write(row);
  };
  for (const auto& g : report.goals) {
    if (g.outcome != control::GoalOutcome::kUnreachable) continue;
    control::TraceSample s;
    s.goal_index = g.index;
    s.goal = g.goal;
    s.commanded = s.actual = cfg.session.initial_kpa;
    put(s, "goal-unreachable");
  }
  for (const auto& s : report.samples) {
    put(s, s.goal_reached ? "goal-reached" : s.goal_stalled ? "goal-stalled" : "");
  }
}

void implant(const Config& cfg, const fs::path& out, ScenarioResult& result) {
  const auto& ic = cfg.scenarios.implant;
  Session session(cfg, (out / "telemetry.csv").string());
  const std::int64_t tail = std::llround(1.0 / cfg.session.step_s);
  const auto limit = session.tick_for_time(ic.max_duration_s);

  std::ofstream log(out / "commands.ndjson", std::ios::binary);
  if (!log) throw Error(ErrorCode::kIo, "cannot write commands.ndjson");
  double last = 0.0;
  if (!ic.command_file.empty()) {
    for (auto& c : load_command_log(ic.command_file)) {
      log << protocol::to_json(c).dump() << '\n';
      if (c.sim_time) last = std::max(last, *c.sim_time);
      session.submit(std::move(c));
    }
  } else {
    ScriptedOperator op(cfg, static_cast<int>(session.sites().size()));
    const auto every = std::llround(op.decision_period_s() / cfg.session.step_s);
    while (!op.done() && session.tick() < limit) {
      if (session.tick() % every == 0) {
        for (auto& c : op.decide(session.observe(), session.events())) {
          log << protocol::to_json(c).dump() << '\n';
          last = *c.sim_time;
          session.submit(std::move(c));
        }
      }
      session.step();
    }
  }
  session.run_until_tick(std::min<std::int64_t>(limit, session.tick_for_time(last) + tail));
  session.finish();
  result.files.push_back("commands.ndjson");
}

void calibrate_torque(const Config& cfg, const fs::path& out, ScenarioResult& result) {
  const auto& cc = cfg.scenarios.calibrate_torque;
  const anchors::TorqueSensor sensor(cfg.anchors.torque_sensor);
  {
    CsvWriter w((out / "telemetry.csv").string(), replay::columns(Schema::kTorqueSessions));
    const int n = static_cast<int>(std::floor((cc.torque_max_nmm - cc.torque_min_nmm) / cc.torque_step_nmm + 1e-9));
    for (int s = 0; s < cc.sessions; ++s) {
      const auto session = anchors::draw_session(cfg.anchors.torque_sensor, cfg.seed,
                                                 static_cast<std::uint64_t>(s));
      for (int i = 0; i <= n; ++i) {
        const double tau = cc.torque_min_nmm + i * cc.torque_step_nmm;
        const double reading = sensor.read(tau, session);
        CsvRow row;
        row << s << session.bias << tau << reading << std::abs(reading - tau)
            << std::abs(reading - tau) / tau;
        w.write(row);
      }
    }
  }
  for (anchors::Medium m : {anchors::Medium::kEf30, anchors::Medium::kTissue}) {
    const std::string name = m == anchors::Medium::kEf30 ? "deploy_trace_ef30.csv" : "deploy_trace_tissue.csv";
    CsvWriter w((out / name).string(), replay::columns(Schema::kDeployTrace));
    const auto& medium = cfg.anchors.medium(m);
    const auto session = anchors::draw_session(cfg.anchors.torque_sensor, cfg.seed, 0);
    anchors::DeploymentState s = anchors::couple(anchors::load_anchor({}, cfg.anchors.anchor, medium));
    const auto put = [&] {
      CsvRow row;
      row << anchors::to_string(m) << s.total_rotation_rad << s.depth_mm << s.driver_torque_nmm
          << sensor.read(s.driver_torque_nmm, session) << anchors::to_string(s.phase);
      w.write(row);
    };
    put();
    int after = 0;
    while (after < 20) {
      s = anchors::rotate_driver(s, cc.deploy_step_rad, true, cc.deploy_force_n, medium,
                                 cfg.anchors.anchor, cfg.anchors.deployment)
              .state;
      put();
      if (s.phase == anchors::Phase::kReleased) ++after;
    }
    result.files.push_back(name);
  }
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"mechanics-sweep", "contact-test", "path-trace",
                                                 "implant", "calibrate-torque"};
  return names;
}

ScenarioResult run_scenario(const std::string& name, const Config& cfg, const std::string& out_dir) {
  cfg.validate();
  const fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error(ErrorCode::kIo, "cannot create " + out_dir);

  ScenarioResult result;
  if (name == "mechanics-sweep") mechanics_sweep(cfg, out, result);
  else if (name == "contact-test") contact_test(cfg, out, result);
  else if (name == "path-trace") path_trace(cfg, out, result);
  else if (name == "implant") implant(cfg, out, result);
  else if (name == "calibrate-torque") calibrate_torque(cfg, out, result);
  else throw Error(ErrorCode::kConfig, "unknown scenario '" + name + "'");

  result.summary = replay::replay_file((out / "telemetry.csv").string());
  write_text(out / "summary.json", replay::dump_summary(result.summary));
  write_text(out / "config.json", to_json(cfg).dump(2) + "\n");
  result.files.insert(result.files.begin(), {"telemetry.csv", "summary.json", "config.json"});
  return result;
}

json error_record(const std::string& scenario, const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return {{"error",
           {{"scenario", scenario},
            {"code", err ? std::string(to_string(err->code())) : std::string("internal")},
            {"message", e.what()}}}};
}

}  // namespace coilpilot
