#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coilpilot/anchors.hpp"
#include "coilpilot/error.hpp"
#include "coilpilot/geometry.hpp"

using namespace coilpilot;
using namespace coilpilot::anchors;

namespace {

DeploymentState coupled(Medium m) {
  return couple(load_anchor({}, AnchorSpec{}, default_medium(m)));
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIo;
}

struct Trace {
  std::vector<double> torques;
  int releases = 0;
  double release_torque = 0.0;
};

Trace deploy(Medium m, double step) {
  const auto medium = default_medium(m);
  DeploymentState s = coupled(m);
  Trace t;
  for (int i = 0; i < 10000 && s.phase != Phase::kReleased; ++i) {
    auto r = rotate_driver(s, step, true, 1.0, medium, AnchorSpec{});
    s = r.state;
    t.torques.push_back(s.driver_torque_nmm);
    if (r.status == RotateStatus::kReleased) {
      ++t.releases;
      t.release_torque = s.release_torque_nmm;
    }
  }
  // Extra rotation after release spins freely.
  for (int i = 0; i < 5; ++i) {
    auto r = rotate_driver(s, step, true, 1.0, medium, AnchorSpec{});
    EXPECT_EQ(r.status, RotateStatus::kFreeSpin);
    s = r.state;
    t.torques.push_back(s.driver_torque_nmm);
  }
  return t;
}

}  // namespace

TEST(Medium, Defaults) {
  const auto ef = default_medium(Medium::kEf30);
  const auto ti = default_medium(Medium::kTissue);
  EXPECT_EQ(ef.preload_torque_nmm, 2.5);
  EXPECT_EQ(ti.preload_torque_nmm, 4.2);
  EXPECT_NEAR(ef.release_ratio_eta, 1.23 / 2.5, 1e-12);
  EXPECT_NEAR(ti.release_ratio_eta, 2.55 / 4.2, 1e-12);
  EXPECT_NEAR(ef.release_ratio_eta, 0.492, 1e-12);
  EXPECT_NEAR(ti.release_ratio_eta, 0.607, 1e-3);
  EXPECT_EQ(reference_pull_force_n(Medium::kEf30), 3.94);
  EXPECT_EQ(reference_pull_force_n(Medium::kTissue), 3.99);
}

TEST(Medium, ReleaseOnlyAfterHeadContact) {
  MediumModel m = default_medium(Medium::kEf30);
  m.insertion_torque_at_full_depth_nmm = 1.5;  // above eta * preload
  EXPECT_THROW(m.validate(), Error);
  m = default_medium(Medium::kEf30);
  m.release_ratio_eta = 1.0;
  EXPECT_THROW(m.validate(), Error);
}

TEST(Medium, Names) {
  EXPECT_EQ(medium_from_string("EF30"), Medium::kEf30);
  EXPECT_EQ(medium_from_string("tissue"), Medium::kTissue);
  EXPECT_EQ(to_string(Medium::kEf30), "EF30");
  EXPECT_THROW(medium_from_string("steel"), Error);
  for (auto p : {Phase::kUnloaded, Phase::kLoaded, Phase::kCoupled, Phase::kInserting, Phase::kHeadContact,
                 Phase::kReleased}) {
    EXPECT_EQ(phase_from_string(to_string(p)), p);
  }
}

TEST(LoadAnchor, HoldingTorque) {
  EXPECT_EQ(load_anchor({}, AnchorSpec{}, default_medium(Medium::kEf30)).holding_torque_nmm, 2.5);
  EXPECT_EQ(load_anchor({}, AnchorSpec{}, default_medium(Medium::kTissue)).holding_torque_nmm, 4.2);
  EXPECT_EQ(load_anchor({}, AnchorSpec{}, default_medium(Medium::kTissue)).phase, Phase::kLoaded);
}

TEST(LoadAnchor, DoubleLoad) {
  const auto m = default_medium(Medium::kEf30);
  const auto s = load_anchor({}, AnchorSpec{}, m);
  EXPECT_EQ(code_of([&] { load_anchor(s, AnchorSpec{}, m); }), ErrorCode::kDoubleLoad);
  EXPECT_EQ(code_of([&] { load_anchor(couple(s), AnchorSpec{}, m); }), ErrorCode::kDoubleLoad);
}

TEST(LoadAnchor, LoadingTraceRisesToPreload) {
  const auto trace = loading_trace(default_medium(Medium::kTissue), 50);
  ASSERT_EQ(trace.size(), 50u);
  EXPECT_EQ(trace.front().second, 0.0);
  EXPECT_NEAR(trace.back().second, 4.2, 1e-12);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GT(trace[i].second, trace[i - 1].second);
}

TEST(Couple, NeedsLoadedDriver) {
  EXPECT_EQ(code_of([] { couple({}); }), ErrorCode::kNotCoupled);
  EXPECT_EQ(coupled(Medium::kEf30).phase, Phase::kCoupled);
}

TEST(RotateDriver, ReleaseTorquePerMedium) {
  for (auto [m, expected] : {std::pair{Medium::kEf30, 1.23}, std::pair{Medium::kTissue, 2.55}}) {
    const auto t = deploy(m, 0.05);
    EXPECT_EQ(t.releases, 1);
    EXPECT_NEAR(t.release_torque, expected, 1e-9);
    EXPECT_LE(std::abs(t.release_torque - expected) / expected, 0.10);
  }
}

TEST(RotateDriver, TorqueTraceShape) {
  for (auto m : {Medium::kEf30, Medium::kTissue}) {
    const auto t = deploy(m, 0.05);
    const auto peak = std::max_element(t.torques.begin(), t.torques.end());
    EXPECT_EQ(*peak, t.release_torque);
    for (auto it = t.torques.begin(); it != peak; ++it) {
      EXPECT_LT(*it, *peak);
      EXPECT_LE(*it, *(it + 1));
    }
    for (auto it = peak + 1; it != t.torques.end(); ++it) EXPECT_LT(*it, *peak);
  }
}

TEST(RotateDriver, DepthFollowsPitch) {
  const auto m = default_medium(Medium::kEf30);
  auto r = rotate_driver(coupled(Medium::kEf30), kPi, true, 1.0, m, AnchorSpec{});
  EXPECT_EQ(r.state.phase, Phase::kInserting);
  EXPECT_NEAR(r.state.depth_mm, 0.5, 1e-12);
  EXPECT_NEAR(r.state.driver_torque_nmm, 1.0 * 0.5 / 5.0, 1e-12);
  r = rotate_driver(r.state, 9 * kPi, true, 1.0, m, AnchorSpec{});
  EXPECT_EQ(r.state.phase, Phase::kHeadContact);
  EXPECT_NEAR(r.state.depth_mm, 5.0, 1e-12);
}

TEST(RotateDriver, NotEngagedWithoutForce) {
  const auto m = default_medium(Medium::kEf30);
  const auto s = coupled(Medium::kEf30);
  for (auto [contact, force] : {std::pair{false, 0.0}, std::pair{true, 0.0}, std::pair{true, 0.49}, std::pair{false, 2.0}}) {
    const auto r = rotate_driver(s, 3.0, contact, force, m, AnchorSpec{});
    EXPECT_EQ(r.status, RotateStatus::kNotEngaged);
    EXPECT_EQ(r.state.depth_mm, 0.0);
    EXPECT_EQ(r.state.phase, Phase::kCoupled);
    EXPECT_EQ(r.state.driver_torque_nmm, 0.0);
    EXPECT_TRUE(r.entered.empty());
  }
}

TEST(RotateDriver, OnlyEngagedWhileForceHeldByDefault) {
  const auto m = default_medium(Medium::kEf30);
  auto s = rotate_driver(coupled(Medium::kEf30), 1.0, true, 1.0, m, AnchorSpec{}).state;
  const double depth = s.depth_mm;
  auto r = rotate_driver(s, 1.0, true, 0.2, m, AnchorSpec{});
  EXPECT_EQ(r.state.depth_mm, depth);
  DeploymentOptions once;
  once.require_sustained_force = false;
  r = rotate_driver(s, 1.0, true, 0.2, m, AnchorSpec{}, once);
  EXPECT_GT(r.state.depth_mm, depth);
}

TEST(RotateDriver, Contracts) {
  const auto m = default_medium(Medium::kEf30);
  EXPECT_EQ(code_of([&] { rotate_driver({}, 1.0, true, 1.0, m, AnchorSpec{}); }), ErrorCode::kNotCoupled);
  EXPECT_EQ(code_of([&] { rotate_driver(coupled(Medium::kEf30), -0.1, true, 1.0, m, AnchorSpec{}); }),
            ErrorCode::kOutOfRange);
}

TEST(RotateDriver, RandomScriptsFollowTheMachine) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> dtheta(0.0, 4.0), force(0.0, 1.2);
  std::uniform_int_distribution<int> action(0, 9);
  const AnchorSpec spec;
  for (int script = 0; script < 1000; ++script) {
    const Medium mk = script % 2 ? Medium::kTissue : Medium::kEf30;
    const auto medium = default_medium(mk);
    DeploymentState s;
    int releases_this_cycle = 0;
    double max_torque_this_cycle = 0.0;
    for (int step = 0; step < 80; ++step) {
      const Phase before = s.phase;
      const int a = action(gen);
      if (a == 0) {
        try {
          s = load_anchor(s, spec, medium);
          EXPECT_TRUE(is_legal_transition(before, s.phase));
          releases_this_cycle = 0;
          max_torque_this_cycle = 0.0;
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kDoubleLoad);
          EXPECT_TRUE(before != Phase::kUnloaded && before != Phase::kReleased);
        }
      } else if (a == 1) {
        try {
          s = couple(s);
          EXPECT_EQ(before, Phase::kLoaded);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kNotCoupled);
        }
      } else {
        try {
          const double f = force(gen);
          const auto r = rotate_driver(s, dtheta(gen), f > 0.2, f, medium, spec);
          Phase prev = before;
          for (Phase p : r.entered) {
            EXPECT_TRUE(is_legal_transition(prev, p)) << to_string(prev) << " -> " << to_string(p);
            EXPECT_NE(prev, p);
            prev = p;
          }
          EXPECT_EQ(prev, r.state.phase);
          if (r.status == RotateStatus::kReleased) {
            ++releases_this_cycle;
            EXPECT_GT(r.state.driver_torque_nmm, max_torque_this_cycle);
          }
          if (r.state.phase != Phase::kReleased) {
            max_torque_this_cycle = std::max(max_torque_this_cycle, r.state.driver_torque_nmm);
          }
          s = r.state;
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kNotCoupled);
          EXPECT_TRUE(before == Phase::kUnloaded || before == Phase::kLoaded);
        }
      }
      EXPECT_GE(s.depth_mm, 0.0);
      EXPECT_LE(s.depth_mm, spec.target_depth_mm);
      EXPECT_LE(releases_this_cycle, 1);
    }
  }
}

TEST(RotateDriver, SelfReleaseAlwaysFiresOnConfigGrid) {
  for (double preload : {1.0, 2.5, 4.2, 8.0}) {
    for (double eta : {0.3, 0.5, 0.8, 0.95}) {
      for (double ins_frac : {0.1, 0.5, 0.9}) {
        for (double k : {0.5, 20.0, 200.0}) {
          MediumModel m{preload, ins_frac * eta * preload, eta, k};
          ASSERT_NO_THROW(m.validate());
          DeploymentState s = couple(load_anchor({}, AnchorSpec{}, m));
          int n = 0;
          while (s.phase != Phase::kReleased && n < 100000) {
            s = rotate_driver(s, 0.1, true, 0.6, m, AnchorSpec{}).state;
            ++n;
          }
          EXPECT_EQ(s.phase, Phase::kReleased);
          EXPECT_NEAR(s.release_torque_nmm, eta * preload, 1e-9);
        }
      }
    }
  }
}

TEST(Transitions, Table) {
  EXPECT_TRUE(is_legal_transition(Phase::kUnloaded, Phase::kLoaded));
  EXPECT_TRUE(is_legal_transition(Phase::kReleased, Phase::kLoaded));
  EXPECT_FALSE(is_legal_transition(Phase::kCoupled, Phase::kHeadContact));
  EXPECT_FALSE(is_legal_transition(Phase::kInserting, Phase::kReleased));
  EXPECT_FALSE(is_legal_transition(Phase::kLoaded, Phase::kUnloaded));
}

TEST(TorqueSensor, ZeroReadsZero) {
  const TorqueSensor sensor{TorqueSensorSpec{}};
  for (std::uint64_t i = 0; i < 50; ++i) EXPECT_EQ(sensor.read(0.0, draw_session(sensor.spec(), 1, i)), 0.0);
}

TEST(TorqueSensor, SaturatesAtMinimumGap) {
  const TorqueSensorSpec spec;
  EXPECT_NEAR(spec.saturation_torque_nmm(), 6.0, 1e-12);
  try {
    hall_signal(6.0, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSaturated);
  }
  EXPECT_NO_THROW(hall_signal(5.9, spec));
}

TEST(TorqueSensor, InverseSquareChain) {
  const TorqueSensorSpec spec;
  const double tau = 2.0;
  const double gap = 2.0 - 5.0 * tau / 20.0;
  EXPECT_NEAR(hall_signal(tau, spec), 400.0 / (gap * gap), 1e-9);
}

TEST(TorqueSensor, MeanErrorOverSessions) {
  const TorqueSensor sensor{TorqueSensorSpec{}};
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto session = draw_session(sensor.spec(), 1, s);
    EXPECT_LE(std::abs(session.bias), 0.05);
    for (double tau = 0.5; tau <= 4.2 + 1e-9; tau += 0.1) {
      sum += std::abs(sensor.read(tau, session) - tau) / tau;
      ++n;
    }
  }
  EXPECT_LE(sum / n, 0.05);
}

TEST(TorqueSensor, ResolutionGrid) {
  const TorqueSensor sensor{TorqueSensorSpec{}};
  const SensorSession none{};
  for (double tau = 0.0; tau < 5.0; tau += 0.013) {
    const double r = sensor.read(tau, none);
    EXPECT_NEAR(r / 0.07, std::round(r / 0.07), 1e-9);
  }
  // Torques closer than one step can read the same.
  EXPECT_EQ(sensor.read(2.00, none), sensor.read(2.01, none));
}

TEST(TorqueSensor, MonotoneInTorque) {
  const TorqueSensor sensor{TorqueSensorSpec{}};
  for (double bias : {-0.05, -0.01, 0.0, 0.03, 0.05}) {
    double prev = -1.0;
    for (double tau = 0.0; tau < 5.9; tau += 0.005) {
      const double r = sensor.read(tau, {bias});
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(Calibration, RoundTripNoiseFree) {
  const TorqueSensorSpec spec;
  const auto map = factory_calibration(spec);
  for (double tau = 0.2; tau <= 5.0; tau += 0.05) {
    EXPECT_LT(std::abs(map(hall_signal(tau, spec)) - tau) / tau, 1e-3) << tau;
  }
}

TEST(Calibration, Contracts) {
  EXPECT_EQ(code_of([] { fit_calibration({{1, 0}, {2, 1}}); }), ErrorCode::kNonMonotoneData);
  EXPECT_EQ(code_of([] { fit_calibration({{1, 0}, {2, 1}, {2, 2}, {3, 3}, {4, 4}}); }), ErrorCode::kNonMonotoneData);
  EXPECT_EQ(code_of([] { fit_calibration({{1, 0}, {2, 1}, {3, 0.5}, {4, 3}, {5, 4}}); }), ErrorCode::kNonMonotoneData);
}

TEST(Calibration, MonotoneInterpolant) {
  const auto map = fit_calibration({{0, 0}, {1, 0.1}, {2, 0.1}, {3, 2}, {4, 2.1}, {6, 5}});
  double prev = map(0.0);
  for (double x = 0.0; x <= 6.0; x += 0.001) {
    EXPECT_GE(map(x), prev - 1e-12);
    prev = map(x);
  }
  EXPECT_EQ(map(3.0), 2.0);
}

TEST(Calibration, NoisySignalsResidual) {
  // Monte-Carlo: fit on signals with 1 % multiplicative noise, judge against the true chain.
  const TorqueSensorSpec spec;
  std::mt19937_64 gen(43);
  std::normal_distribution<double> noise(0.0, 0.01);
  const double full_scale = spec.calibration_max_torque_nmm;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> samples;
    for (int i = 0; i < spec.calibration_points; ++i) {
      const double tau = full_scale * i / (spec.calibration_points - 1);
      double sig = hall_signal(tau, spec) * (1.0 + noise(gen));
      if (!samples.empty() && sig <= samples.back().first) sig = samples.back().first + 1e-6;
      samples.emplace_back(sig, tau);
    }
    const auto map = fit_calibration(samples);
    double sq = 0.0;
    int n = 0;
    for (double tau = 0.0; tau <= full_scale; tau += 0.05, ++n) {
      const double e = map(hall_signal(tau, spec)) - tau;
      sq += e * e;
    }
    EXPECT_LE(std::sqrt(sq / n), 0.05 * full_scale);
  }
}

TEST(Sessions, Deterministic) {
  const TorqueSensorSpec spec;
  EXPECT_EQ(draw_session(spec, 3, 9).bias, draw_session(spec, 3, 9).bias);
  EXPECT_NE(draw_session(spec, 3, 9).bias, draw_session(spec, 3, 10).bias);
}
