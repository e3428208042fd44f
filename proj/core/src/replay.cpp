#include "coilpilot/replay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "coilpilot/control.hpp"
#include "coilpilot/error.hpp"
#include "coilpilot/session.hpp"

namespace coilpilot::replay {

using nlohmann::json;
using telemetry::CsvTable;

namespace {

json stats(std::vector<double> values) {
  const control::ErrorSummary s = control::summarize_errors(std::move(values));
  return {{"count", s.count}, {"median", s.median_mm}, {"mean", s.mean_mm},
          {"min", s.min_mm},  {"max", s.max_mm}};
}

bool has_item(const std::string& list, std::string_view item) {
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(';', start), list.size());
    if (list.compare(start, end - start, item) == 0) return true;
    start = end + 1;
  }
  return false;
}

json mechanics_sweep(const CsvTable& t) {
  const auto chamber = t.column("chamber_id");
  const auto pressure = t.column("pressure_kpa");
  const auto ref = t.column("reference_displacement_mm");
  const auto dev = t.column("deviation_mm");
  const auto evaluated = t.column("evaluated");
  std::map<int, std::pair<double, double>> per;  // chamber -> (max, sum of squares)
  std::map<int, int> counts;
  double max_dev = 0.0, max_all = 0.0, max_ref = 0.0, at_p = 0.0;
  int at_chamber = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double d = t.number(r, dev);
    max_all = std::max(max_all, d);
    max_ref = std::max(max_ref, t.number(r, ref));
    if (t.text(r, evaluated) != "1") continue;
    const int c = static_cast<int>(t.number(r, chamber));
    auto& [m, sq] = per[c];
    m = std::max(m, d);
    sq += d * d;
    ++counts[c];
    if (d > max_dev) {
      max_dev = d;
      at_p = t.number(r, pressure);
      at_chamber = c;
    }
  }
  json chambers = json::array();
  for (const auto& [c, v] : per) {
    chambers.push_back({{"chamber_id", c},
                        {"max_deviation_mm", v.first},
                        {"rms_deviation_mm", std::sqrt(v.second / counts[c])}});
  }
  return {{"max_deviation_mm", max_dev},
          {"max_deviation_at_kpa", at_p},
          {"max_deviation_chamber", at_chamber},
          {"relative_max_deviation", max_ref > 0.0 ? max_dev / max_ref : 0.0},
          {"max_deviation_all_pressures_mm", max_all},
          {"chambers", chambers},
          {"rows", t.rows.size()}};
}

json contact_test(const CsvTable& t) {
  const auto kase = t.column("case");
  const auto cycle = t.column("cycle");
  const auto force = t.column("force_n");
  const auto contact = t.column("in_contact");
  struct Acc {
    std::map<int, std::pair<int, int>> cycles;  // cycle -> (rows, rows in contact)
    double sum = 0.0, max = 0.0, min = std::numeric_limits<double>::infinity(), max_all = 0.0;
    int n = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> cases;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& name = t.text(r, kase);
    if (!cases.count(name)) order.push_back(name);
    Acc& a = cases[name];
    const double f = t.number(r, force);
    a.max_all = std::max(a.max_all, f);
    const int c = static_cast<int>(t.number(r, cycle));
    if (c < 0) continue;
    auto& [rows, touching] = a.cycles[c];
    ++rows;
    if (t.text(r, contact) == "1") ++touching;
    a.sum += f;
    a.max = std::max(a.max, f);
    a.min = std::min(a.min, f);
    ++a.n;
  }
  json out = json::object();
  for (const auto& name : order) {
    const Acc& a = cases[name];
    double worst = 1.0, total = 0.0;
    for (const auto& [c, v] : a.cycles) {
      const double frac = static_cast<double>(v.second) / v.first;
      worst = std::min(worst, frac);
      total += frac;
    }
    out[name] = {{"cycles", a.cycles.size()},
                 {"contact_fraction_min", a.cycles.empty() ? 0.0 : worst},
                 {"contact_fraction_mean", a.cycles.empty() ? 0.0 : total / a.cycles.size()},
                 {"force_mean_n", a.n ? a.sum / a.n : 0.0},
                 {"force_min_n", a.n ? a.min : 0.0},
                 {"force_max_n", a.max},
                 {"force_max_all_n", a.max_all}};
  }
  return {{"cases", out}, {"rows", t.rows.size()}};
}

json path_trace(const CsvTable& t) {
  const auto event = t.column("event");
  const auto time = t.column("t_s");
  const std::size_t g = t.column("goal_x_mm");
  const std::size_t tip = t.column("tip_x_mm");
  std::vector<double> errors;
  int reached = 0, stalled = 0, unreachable = 0;
  json per_goal = json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& e = t.text(r, event);
    if (e == "goal-stalled") ++stalled;
    if (e == "goal-unreachable") ++unreachable;
    if (e != "goal-reached") continue;
    ++reached;
    Vec3 goal, at;
    for (int i = 0; i < 3; ++i) {
      goal[i] = t.number(r, g + static_cast<std::size_t>(i));
      at[i] = t.number(r, tip + static_cast<std::size_t>(i));
    }
    errors.push_back((at - goal).norm());
  }
  const double duration = t.rows.empty() ? 0.0 : t.number(t.rows.size() - 1, time);
  return {{"goals_reached", reached},
          {"goals_stalled", stalled},
          {"goals_unreachable", unreachable},
          {"tracking_error_mm", stats(errors)},
          {"duration_s", duration},
          {"rows", t.rows.size()}};
}

json session(const CsvTable& t) {
  const auto time = t.column("t_s");
  const auto events = t.column("events");
  const auto commands = t.column("commands");
  const auto phase = t.column("phase");
  const auto depth = t.column("depth_mm");
  const auto target = t.column("target_depth_mm");
  const auto reading = t.column("torque_reading_nmm");
  const auto driver = t.column("driver_torque_nmm");
  const auto site = t.column("site");
  const auto su = t.column("site_u_mm"), sv = t.column("site_v_mm");
  const auto tu = t.column("tip_u_mm"), tv = t.column("tip_v_mm");
  const auto force = t.column("force_n");
  json anchors = json::array();
  std::vector<double> errors;
  int successes = 0, goals = 0, stalls = 0, command_count = 0, rejected = 0;
  double max_force = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    max_force = std::max(max_force, t.number(r, force));
    const std::string& cmds = t.text(r, commands);
    if (!cmds.empty()) {
      command_count += 1 + static_cast<int>(std::count(cmds.begin(), cmds.end(), ';'));
      rejected += static_cast<int>(std::count(cmds.begin(), cmds.end(), '!'));
    }
    const std::string& ev = t.text(r, events);
    if (has_item(ev, "goal-reached")) ++goals;
    if (has_item(ev, "stalled")) ++stalls;
    if (!has_item(ev, "anchor-released")) continue;
    const double err = std::hypot(t.number(r, tu) - t.number(r, su), t.number(r, tv) - t.number(r, sv));
    const double d = t.number(r, depth);
    const bool ok = t.text(r, phase) == "released" && std::abs(d - t.number(r, target)) <= 1e-9;
    successes += ok ? 1 : 0;
    errors.push_back(err);
    anchors.push_back({{"anchor", anchors.size() + 1},
                       {"site", t.text(r, site)},
                       {"t_s", t.number(r, time)},
                       {"lateral_error_mm", err},
                       {"depth_mm", d},
                       {"release_torque_nmm", t.number(r, driver)},
                       {"torque_reading_nmm", t.number(r, reading)},
                       {"success", ok}});
  }
  return {{"anchors", anchors},
          {"anchors_released", anchors.size()},
          {"successes", successes},
          {"lateral_error_mm", stats(errors)},
          {"goals_reached", goals},
          {"stalls", stalls},
          {"commands", command_count},
          {"commands_rejected", rejected},
          {"max_force_n", max_force},
          {"duration_s", t.rows.empty() ? 0.0 : t.number(t.rows.size() - 1, time)},
          {"rows", t.rows.size()}};
}

json torque_sessions(const CsvTable& t) {
  const auto session = t.column("session");
  const auto reading = t.column("reading_nmm");
  const auto abs_err = t.column("abs_error_nmm");
  const auto rel_err = t.column("rel_error");
  std::set<std::string> sessions;
  std::vector<double> readings;
  double sum_abs = 0.0, sum_rel = 0.0, max_rel = 0.0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    sessions.insert(t.text(r, session));
    readings.push_back(t.number(r, reading));
    sum_abs += t.number(r, abs_err);
    sum_rel += t.number(r, rel_err);
    max_rel = std::max(max_rel, t.number(r, rel_err));
  }
  std::sort(readings.begin(), readings.end());
  double resolution = 0.0;
  for (std::size_t i = 1; i < readings.size(); ++i) {
    const double d = readings[i] - readings[i - 1];
    if (d > 1e-9 && (resolution == 0.0 || d < resolution)) resolution = d;
  }
  bool quantized = resolution > 0.0;
  for (double v : readings) {
    const double steps = v / resolution;
    if (std::abs(steps - std::round(steps)) > 1e-6) quantized = false;
  }
  const double n = t.rows.empty() ? 1.0 : static_cast<double>(t.rows.size());
  return {{"sessions", sessions.size()},
          {"readings", t.rows.size()},
          {"mean_abs_error_nmm", sum_abs / n},
          {"mean_rel_error", sum_rel / n},
          {"max_rel_error", max_rel},
          {"resolution_nmm", std::round(resolution * 1e9) / 1e9},
          {"readings_on_grid", quantized},
          {"rows", t.rows.size()}};
}

json deploy_trace(const CsvTable& t) {
  const auto phase = t.column("phase");
  const auto torque = t.column("torque_nmm");
  const auto depth = t.column("depth_mm");
  const auto rotation = t.column("rotation_rad");
  int releases = 0;
  double release_torque = 0.0, max_torque = 0.0, release_rotation = 0.0;
  std::size_t max_row = 0;
  bool max_unique = true;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double tau = t.number(r, torque);
    if (tau > max_torque) {
      max_torque = tau;
      max_row = r;
      max_unique = true;
    } else if (tau == max_torque && r > 0) {
      max_unique = false;
    }
    if (t.text(r, phase) == "released" && (r == 0 || t.text(r - 1, phase) != "released")) {
      ++releases;
      release_torque = tau;
      release_rotation = t.number(r, rotation);
    }
  }
  const bool max_at_release = releases == 1 && max_unique && t.text(max_row, phase) == "released";
  return {{"releases", releases},
          {"release_torque_nmm", release_torque},
          {"release_rotation_rad", release_rotation},
          {"max_torque_nmm", max_torque},
          {"strict_max_at_release", max_at_release},
          {"final_depth_mm", t.rows.empty() ? 0.0 : t.number(t.rows.size() - 1, depth)},
          {"rows", t.rows.size()}};
}

}  // namespace

std::string_view to_string(Schema schema) {
  switch (schema) {
    case Schema::kMechanicsSweep: return "mechanics-sweep";
    case Schema::kContactTest: return "contact-test";
    case Schema::kPathTrace: return "path-trace";
    case Schema::kSession: return "session";
    case Schema::kTorqueSessions: return "torque-sessions";
    case Schema::kDeployTrace: return "deploy-trace";
  }
  return "unknown";
}

const std::vector<std::string>& columns(Schema schema) {
  static const std::vector<std::string> mechanics = {
      "chamber_id", "pressure_kpa", "reference_displacement_mm", "model_displacement_mm",
      "deviation_mm", "evaluated"};
  static const std::vector<std::string> contact = {
      "case", "t_s", "cycle", "surface_disp_mm", "penetration_mm", "force_n", "in_contact"};
  static const std::vector<std::string> trace = {
      "t_s",         "goal_index",  "goal_x_mm",   "goal_y_mm",   "goal_z_mm",
      "tip_x_mm",    "tip_y_mm",    "tip_z_mm",    "meas_x_mm",   "meas_y_mm",
      "meas_z_mm",   "error_norm_mm", "p_cmd_1_kpa", "p_cmd_2_kpa", "p_cmd_3_kpa",
      "p_act_1_kpa", "p_act_2_kpa", "p_act_3_kpa", "event"};
  static const std::vector<std::string> session_cols = Session::telemetry_columns();
  static const std::vector<std::string> torque = {
      "session", "bias", "true_torque_nmm", "reading_nmm", "abs_error_nmm", "rel_error"};
  static const std::vector<std::string> deploy = {
      "medium", "rotation_rad", "depth_mm", "torque_nmm", "reading_nmm", "phase"};
  switch (schema) {
    case Schema::kMechanicsSweep: return mechanics;
    case Schema::kContactTest: return contact;
    case Schema::kPathTrace: return trace;
    case Schema::kSession: return session_cols;
    case Schema::kTorqueSessions: return torque;
    case Schema::kDeployTrace: return deploy;
  }
  return mechanics;
}

Schema detect_schema(const CsvTable& table) {
  for (Schema s : {Schema::kMechanicsSweep, Schema::kContactTest, Schema::kPathTrace, Schema::kSession,
                   Schema::kTorqueSessions, Schema::kDeployTrace}) {
    if (table.columns == columns(s)) return s;
  }
  std::string header;
  for (const auto& c : table.columns) header += (header.empty() ? "" : ",") + c;
  throw Error(ErrorCode::kSchemaMismatch, "unrecognised telemetry header: " + header);
}

json summarize(const CsvTable& table) {
  const Schema schema = detect_schema(table);
  json body;
  switch (schema) {
    case Schema::kMechanicsSweep: body = mechanics_sweep(table); break;
    case Schema::kContactTest: body = contact_test(table); break;
    case Schema::kPathTrace: body = path_trace(table); break;
    case Schema::kSession: body = session(table); break;
    case Schema::kTorqueSessions: body = torque_sessions(table); break;
    case Schema::kDeployTrace: body = deploy_trace(table); break;
  }
  body["schema"] = std::string(to_string(schema));
  return body;
}

json replay_file(const std::string& path) { return summarize(telemetry::read_csv(path)); }

std::string dump_summary(const json& summary) { return summary.dump(2) + "\n"; }

}  // namespace coilpilot::replay
