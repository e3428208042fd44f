// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "../support/net_client.hpp"
#include "coilpilot/anchors.hpp"
#include "coilpilot/error.hpp"
#include "coilpilot/kinematics.hpp"
#include "coilpilot/mechanics.hpp"
#include "coilpilot/replay.hpp"
#include "coilpilot/scenarios.hpp"
#include "coilpilot/server.hpp"

namespace fs = std::filesystem;
using namespace coilpilot;
using nlohmann::json;

namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

fs::path g_root;

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh(const std::string& name) {
  const fs::path dir = g_root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int check(const std::string& name, double limit_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool fast = dt < limit_s;
  const bool pass = v.ok && fast;
  std::printf("%s %s: %s [%.3f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", name.c_str(),
              v.detail.c_str(), dt, limit_s, fast ? "" : ", too slow");
  std::fflush(stdout);
  return pass ? 0 : 1;
}

// ---- mechanics ----

Verdict mechanics_fidelity() {
  const auto s = run_scenario("mechanics-sweep", Config{}, fresh("mechanics").string()).summary;
  const double dev = s["max_deviation_mm"];
  return {dev <= 1.5, fmt("max deviation %.3f mm over 5-100 kPa (<= 1.5)", dev)};
}

Verdict inversion_derivative() {
  const mechanics::StackSpec spec;
  double worst_inv = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double p = std::pow(10.0, -1.0 + 3.0 * i / 200.0);  // 0.1 .. 100 kPa
    const double back = mechanics::pressure_from_length(mechanics::stack_length(p, spec), spec, 100.0);
    worst_inv = std::max(worst_inv, std::abs(back - p) / p);
  }
  double worst_der = 0.0;
  for (int i = 0; i <= 190; ++i) {
    const double p = 5.0 + 0.5 * i;
    const double h = 1e-3;
    const double fd = (mechanics::stack_length(p + h, spec) - mechanics::stack_length(p - h, spec)) / (2 * h);
    const double an = mechanics::length_pressure_derivative(p, spec);
    worst_der = std::max(worst_der, std::abs(an - fd) / std::abs(fd));
  }
  return {worst_inv < 1e-9 && worst_der < 1e-3,
          fmt("round trip %.2e", worst_inv) + fmt(" (< 1e-9), derivative vs FD %.2e (< 1e-3)", worst_der)};
}

// ---- kinematics ----

Verdict kinematics_properties() {
  using namespace kinematics;
  const ActuatorSpec spec;
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> len(25.0, 65.0), unit(0.0, 1.0);

  double branch = 0.0;
  for (double s : {25.0, 45.0, 65.0}) {
    for (double phi : {0.0, 2.0, -1.0}) {
      ArcState arc;
      arc.arclength_mm = s;
      arc.plane_angle_rad = phi;
      arc.curvature_per_mm = kSeriesBendThreshold / s;
      arc.bend_rad = kSeriesBendThreshold;
      ArcState lo = arc, hi = arc;
      lo.curvature_per_mm *= 1.0 - 1e-12;
      lo.bend_rad *= 1.0 - 1e-12;
      hi.curvature_per_mm *= 1.0 + 1e-12;
      hi.bend_rad *= 1.0 + 1e-12;
      branch = std::max(branch, (tip_from_arc(lo).position - tip_from_arc(hi).position).norm());
      branch = std::max(branch, (detail::tip_position_series(arc) - detail::tip_position_closed(arc)).norm());
    }
  }

  const Eigen::Matrix3d r120 = Eigen::AngleAxisd(2.0 * kPi / 3.0, Vec3::UnitZ()).toRotationMatrix();
  double equiv = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vec3 l(len(gen), len(gen), len(gen));
    const Vec3 a = tip_from_arc(arc_from_lengths(l, spec)).position;
    const Vec3 b = tip_from_arc(arc_from_lengths(Vec3(l[2], l[0], l[1]), spec)).position;
    equiv = std::max(equiv, (r120 * a - b).norm());
  }

  int chord_violations = 0;
  for (int i = 0; i < 100; ++i) {
    ArcState arc;
    arc.arclength_mm = len(gen);
    arc.bend_rad = 2.0 * kPi * unit(gen);
    arc.curvature_per_mm = arc.bend_rad / arc.arclength_mm;
    arc.plane_angle_rad = 2.0 * kPi * unit(gen);
    if (tip_from_arc(arc).position.norm() > arc.arclength_mm + 1e-9) ++chord_violations;
  }

  double filter = 0.0;
  int bound_violations = 0;
  for (int i = 0; i < 100; ++i) {
    const Mat3 j = Mat3::NullaryExpr([&] { return 4.0 * unit(gen) - 2.0; }) *
                   std::pow(10.0, -3.0 + 3.0 * unit(gen));
    const double lambda = 0.01 + unit(gen);
    const Vec3 s = singular_values(j);
    const Vec3 sp = singular_values(damped_pseudo_inverse(j, lambda));
    if (sp.maxCoeff() > 1.0 / (2.0 * lambda) + 1e-9) ++bound_violations;
    for (int k = 0; k < 3; ++k) {
      const double expected = s[k] / (s[k] * s[k] + lambda * lambda);
      double nearest = 1e300;
      for (int m = 0; m < 3; ++m) nearest = std::min(nearest, std::abs(sp[m] - expected));
      filter = std::max(filter, nearest / std::max(expected, 1e-12));
    }
  }

  const bool ok = branch < 1e-9 && equiv < 1e-9 && chord_violations == 0 && filter < 1e-9 &&
                  bound_violations == 0;
  return {ok, fmt("branch gap %.1e mm", branch) + fmt(", 120 deg equivariance %.1e mm", equiv) +
                  ", chord violations " + std::to_string(chord_violations) + "/100" +
                  fmt(", pinv filter rel err %.1e", filter) +
                  ", 1/(2 lambda) bound violations " + std::to_string(bound_violations)};
}

// ---- path tracing ----

Verdict path_tracing() {
  Config cfg;
  const auto s = run_scenario("path-trace", cfg, fresh("path").string()).summary;
  const double median = s["tracking_error_mm"]["median"];
  const double max = s["tracking_error_mm"]["max"];
  const int reached = s["goals_reached"];
  const bool ok = median <= 0.6 && max <= 3.0 && reached == cfg.trajectory.discretize_points;
  return {ok, fmt("median %.3f mm (<= 0.6)", median) + fmt(", max %.3f mm (<= 3.0)", max) +
                  ", goals reached " + std::to_string(reached)};
}

// ---- contact ----

Verdict contact() {
  const auto s = run_scenario("contact-test", Config{}, fresh("contact").string()).summary;
  const auto& v = s["cases"]["vertical"];
  const double frac = v["contact_fraction_min"], mean = v["force_mean_n"], max = v["force_max_all_n"];
  const bool ok = frac >= 0.95 && mean >= 0.4 && mean <= 0.8 && max < 5.5;
  return {ok, fmt("contact fraction min %.3f (>= 0.95)", frac) + fmt(", mean force %.3f N", mean) +
                  fmt(" ([0.4, 0.8]), max %.3f N (< 5.5)", max)};
}

// ---- deployment ----

struct FullDeploy {
  int releases = 0;
  double release_torque = 0.0;
  bool strict_max = false;
};

FullDeploy scripted_deploy(anchors::Medium medium, const Config& cfg) {
  const auto& m = cfg.anchors.medium(medium);
  auto s = anchors::couple(anchors::load_anchor({}, cfg.anchors.anchor, m));
  FullDeploy out;
  double max_before = 0.0, max_after = 0.0;
  bool released = false;
  for (int i = 0; i < 2000; ++i) {
    const auto r = anchors::rotate_driver(s, 0.05, true, 1.0, m, cfg.anchors.anchor, cfg.anchors.deployment);
    s = r.state;
    if (r.status == anchors::RotateStatus::kReleased) {
      ++out.releases;
      out.release_torque = s.driver_torque_nmm;
      released = true;
    } else if (released) {
      max_after = std::max(max_after, s.driver_torque_nmm);
    } else {
      max_before = std::max(max_before, s.driver_torque_nmm);
    }
  }
  out.strict_max = out.release_torque > max_before && out.release_torque > max_after;
  return out;
}

// Random command scripts against the state machine: every phase change is a
// legal edge, depth stays in range and each loaded anchor releases at most once.
std::string random_scripts(const Config& cfg, int scripts) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> action(0, 9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int n = 0; n < scripts; ++n) {
    const auto medium = n % 2 ? anchors::Medium::kTissue : anchors::Medium::kEf30;
    const auto& m = cfg.anchors.medium(medium);
    anchors::DeploymentState s;
    int releases_this_cycle = 0;
    double peak = 0.0;
    for (int step = 0; step < 200; ++step) {
      const int a = action(gen);
      const anchors::Phase before = s.phase;
      try {
        if (a == 0) {
          s = anchors::load_anchor(s, cfg.anchors.anchor, m);
          releases_this_cycle = 0;
          peak = 0.0;
        } else if (a == 1) {
          s = anchors::couple(s);
        } else {
          const bool contact = unit(gen) < 0.8;
          const double force = 1.2 * unit(gen);
          const auto r = anchors::rotate_driver(s, 2.0 * unit(gen), contact, force, m,
                                                cfg.anchors.anchor, cfg.anchors.deployment);
          anchors::Phase at = before;
          for (auto p : r.entered) {
            if (!anchors::is_legal_transition(at, p)) {
              return "illegal " + std::string(anchors::to_string(at)) + " -> " +
                     std::string(anchors::to_string(p));
            }
            at = p;
          }
          if (at != r.state.phase) return "entered list does not end at the new phase";
          if (r.status == anchors::RotateStatus::kReleased) {
            if (++releases_this_cycle > 1) return "second release in one cycle";
            if (!(r.state.driver_torque_nmm > peak)) return "release torque is not a strict maximum";
          }
          if (r.state.phase != anchors::Phase::kReleased) peak = std::max(peak, r.state.driver_torque_nmm);
          s = r.state;
        }
      } catch (const Error& e) {
        if (s.phase != before) return "state changed on a rejected command";
        continue;
      }
      if (s.phase != before && a < 2 && !anchors::is_legal_transition(before, s.phase)) {
        return "illegal " + std::string(anchors::to_string(before)) + " -> " +
               std::string(anchors::to_string(s.phase));
      }
      if (s.depth_mm < 0.0 || s.depth_mm > cfg.anchors.anchor.target_depth_mm + 1e-12) {
        return "depth out of range";
      }
    }
  }
  return "";
}

Verdict deployment() {
  const Config cfg;
  const auto ef = scripted_deploy(anchors::Medium::kEf30, cfg);
  const auto ti = scripted_deploy(anchors::Medium::kTissue, cfg);
  const bool torque_ok = std::abs(ef.release_torque - 1.23) <= 0.123 && std::abs(ti.release_torque - 2.55) <= 0.255;
  const std::string broken = random_scripts(cfg, 1000);
  const bool ok = ef.releases == 1 && ti.releases == 1 && ef.strict_max && ti.strict_max && torque_ok &&
                  broken.empty();
  return {ok, fmt("EF30 release %.3f N*mm", ef.release_torque) + fmt(", tissue %.3f N*mm", ti.release_torque) +
                  ", releases " + std::to_string(ef.releases) + "/" + std::to_string(ti.releases) +
                  (ef.strict_max && ti.strict_max ? ", strict max at release" : ", max not at release") +
                  ", 1000 random scripts " + (broken.empty() ? "legal" : "broken: " + broken)};
}

// ---- implant ----

Verdict implant() {
  const Config cfg;
  const auto s = run_scenario("implant", cfg, fresh("implant").string()).summary;
  int at_depth = 0;
  for (const auto& a : s["anchors"]) {
    if (a["success"].get<bool>() && std::abs(a["depth_mm"].get<double>() - 5.0) < 1e-9) ++at_depth;
  }
  const double mean = s["lateral_error_mm"]["mean"], max = s["lateral_error_mm"]["max"];
  const bool ok = at_depth == 9 && s["anchors_released"] == 9 && mean <= 2.0 && max <= 3.0;
  return {ok, std::to_string(at_depth) + "/9 released at 5 mm" + fmt(", lateral error mean %.3f mm", mean) +
                  fmt(" (<= 2.0), max %.3f mm (<= 3.0)", max)};
}

// ---- torque sensing ----

Verdict torque_sensing() {
  const auto s = run_scenario("calibrate-torque", Config{}, fresh("torque").string()).summary;
  const double err = s["mean_rel_error"], res = s["resolution_nmm"];
  const bool ok = s["sessions"] == 1000 && err <= 0.05 && std::abs(res - 0.07) < 1e-9 &&
                  s["readings_on_grid"].get<bool>();
  return {ok, fmt("mean reading error %.2f%% (<= 5%%)", 100.0 * err) +
                  fmt(", resolution %.3f N*mm", res) +
                  (s["readings_on_grid"].get<bool>() ? " on grid" : " off grid")};
}

// ---- determinism ----

Verdict determinism() {
  std::string diff;
  for (const auto& name : scenario_names()) {
    const auto a = fresh("det_" + name + "_a"), b = fresh("det_" + name + "_b");
    const auto files = run_scenario(name, Config{}, a.string()).files;
    run_scenario(name, Config{}, b.string());
    for (const auto& f : files) {
      if (slurp(a / f) != slurp(b / f)) diff += " " + name + "/" + f;
    }
  }

  // Server fed the implant command stream must log the same telemetry.
  const fs::path headless = g_root / "det_implant_a";
  const auto rows = telemetry::read_csv((headless / "telemetry.csv").string()).rows.size();
  Config cfg;
  cfg.session.time_scale = 0.0;
  const auto served = fresh("det_served");
  {
    SessionServer server(cfg, {"127.0.0.1", 0, static_cast<double>(rows) * cfg.control.control_period_s,
                               served.string()});
    const int port = server.start();
    std::thread t([&] { server.run(); });
    {
      testing::LineClient client(port);
      std::ifstream in(headless / "commands.ndjson");
      std::string line;
      while (std::getline(in, line)) client.send_line(line);
      client.shutdown_write();
      client.read_all(300.0);
    }
    server.stop();
    t.join();
  }
  const bool same = slurp(served / "telemetry.csv") == slurp(headless / "telemetry.csv");
  return {diff.empty() && same,
          (diff.empty() ? std::string("all scenarios bit-identical on rerun") : "differs:" + diff) +
              (same ? ", server telemetry equals headless implant" : ", server telemetry differs")};
}

}  // namespace

int main(int argc, char** argv) {
  g_root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "coilpilot_acceptance";
  fs::create_directories(g_root);
  int failures = 0;
  failures += check("mechanics-fidelity", 1.0, mechanics_fidelity);
  failures += check("inversion-derivative", 1.0, inversion_derivative);
  failures += check("kinematics-properties", 5.0, kinematics_properties);
  failures += check("path-tracing", 60.0, path_tracing);
  failures += check("contact", 30.0, contact);
  failures += check("deployment-state-machine", 30.0, deployment);
  failures += check("nine-anchor-implant", 120.0, implant);
  failures += check("torque-sensing", 10.0, torque_sensing);
  failures += check("determinism", 600.0, determinism);
  return failures;
}
