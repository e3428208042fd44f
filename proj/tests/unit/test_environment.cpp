#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coilpilot/environment.hpp"
#include "coilpilot/error.hpp"
#include "coilpilot/rng.hpp"

using namespace coilpilot;
using namespace coilpilot::environment;

TEST(MotileTarget, DisplacementLaw) {
  MotileTarget t;
  EXPECT_EQ(displacement_at(0.0, t), 0.0);
  EXPECT_NEAR(displacement_at(0.5, t), 8.0, 1e-12);
  t.frequency_hz = 2.5;
  EXPECT_NEAR(displacement_at(1.0 / (2 * 2.5), t), 8.0, 1e-12);
  EXPECT_NEAR(displacement_at(0.05, t), 4.0 * (1 - std::cos(2 * kPi * 2.5 * 0.05)), 1e-12);
}

TEST(MotileTarget, PeriodicAndBounded) {
  MotileTarget t;
  t.phase_rad = 0.4;
  std::mt19937_64 gen(37);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = u(gen);
    const double d = displacement_at(s, t);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, t.amplitude_mm);
    EXPECT_NEAR(d, displacement_at(s + 1.0 / t.frequency_hz, t), 1e-9);
  }
}

TEST(MotileTarget, PoseMovesAlongNormal) {
  MotileTarget t;
  const Plane p = target_pose_at(0.5, t);
  EXPECT_LT((p.origin - Vec3(0, 0, 42)).norm(), 1e-12);
  EXPECT_EQ(p.normal, t.base_pose.normal);
}

TEST(MotileTarget, SitesMoveRigidly) {
  MotileTarget t;
  t.base_pose = {Vec3(3, -2, 48), Vec3(0.3, -0.2, -1).normalized()};
  std::vector<AnchorSite> sites = {{"a", {24, 0}}, {"b", {-12, 20.78}}, {"c", {-12, -20.78}}, {"d", {1, 1}}};
  const auto dist = [&](double s, int i, int j) {
    const Plane p = target_pose_at(s, t);
    return (site_world_position(sites[static_cast<std::size_t>(i)], p) -
            site_world_position(sites[static_cast<std::size_t>(j)], p)).norm();
  };
  for (double s = 0.0; s < 2.0; s += 0.037) {
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) EXPECT_NEAR(dist(s, i, j), dist(0.0, i, j), 1e-9);
    }
  }
}

TEST(MotileTarget, Validation) {
  MotileTarget t;
  t.frequency_hz = 0.0;
  EXPECT_THROW(t.validate(), Error);
  t = {};
  t.base_pose.normal = Vec3(0, 0, 2);
  EXPECT_THROW(t.validate(), Error);
}

TEST(Contact, AboveSurfaceNoContact) {
  const Plane surface{Vec3(0, 0, 50), Vec3(0, 0, -1)};
  const auto r = resolve_contact(Vec3(0, 0, 49), Vec3::UnitZ(), surface, 0.1);
  EXPECT_FALSE(r.state.in_contact);
  EXPECT_EQ(r.state.normal_force_n, 0.0);
  EXPECT_EQ(r.tip, Vec3(0, 0, 49));
}

TEST(Contact, PenetrationForce) {
  const Plane surface{Vec3(0, 0, 50), Vec3(0, 0, -1)};
  const auto r = resolve_contact(Vec3(1, 2, 56.3), Vec3::UnitZ(), surface, 0.1);
  EXPECT_TRUE(r.state.in_contact);
  EXPECT_NEAR(r.state.penetration_mm, 6.3, 1e-12);
  EXPECT_NEAR(r.state.normal_force_n, 0.63, 1e-12);
  EXPECT_LT((r.tip - Vec3(1, 2, 50)).norm(), 1e-12);
}

TEST(Contact, ForceMonotoneAndZeroAtSeparation) {
  const Plane surface{Vec3(0, 0, 50), Vec3(0.2, 0, -1).normalized()};
  double prev = -1.0;
  for (double d = -2.0; d <= 10.0; d += 0.01) {
    const Vec3 tip = surface.origin - d * surface.normal;
    const auto r = resolve_contact(tip, Vec3::UnitZ(), surface, 0.1);
    EXPECT_GE(r.state.normal_force_n, prev);
    EXPECT_EQ(r.state.in_contact, r.state.normal_force_n > 0.0);
    if (d <= 0.0) {
      EXPECT_EQ(r.state.normal_force_n, 0.0);
    }
    prev = r.state.normal_force_n;
  }
}

TEST(Contact, MissesOutsideSurfaceRadius) {
  const Plane surface{Vec3(0, 0, 50), Vec3(0, 0, -1)};
  EXPECT_FALSE(resolve_contact(Vec3(45, 0, 52), Vec3::UnitZ(), surface, 0.1, 40.0).state.in_contact);
  EXPECT_TRUE(resolve_contact(Vec3(35, 0, 52), Vec3::UnitZ(), surface, 0.1, 40.0).state.in_contact);
}

TEST(Contact, SlipFromStickPoint) {
  const Plane surface{Vec3(0, 0, 50), Vec3(0, 0, -1)};
  const auto r = resolve_contact(Vec3(3, 4, 51), Vec3::UnitZ(), surface, 0.1, 100.0, Vec3(0, 0, 50));
  EXPECT_NEAR(r.state.tangential_slip_mm, 5.0, 1e-12);
}

TEST(Sensor, IdentityWithoutNoise) {
  SensorModel m;
  m.position_noise_sigma_mm = 0.0;
  m.quantization_mm = 0.0;
  const Vec3 p(1.23456789, -9.87654321, 42.0);
  EXPECT_EQ(sense_tip(p, m, 17), p);
}

TEST(Sensor, SampleMeanConverges) {
  SensorModel m;
  m.seed = 99;
  const Vec3 p(10.0, -3.0, 45.0);
  Vec3 sum = Vec3::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += sense_tip(p, m, static_cast<std::uint64_t>(i));
  const Vec3 mean = sum / n;
  EXPECT_LT((mean - p).cwiseAbs().maxCoeff(), 3 * m.position_noise_sigma_mm / 100);
}

TEST(Sensor, SampleSpreadMatchesSigma) {
  SensorModel m;
  m.quantization_mm = 0.0;
  m.seed = 5;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sq += (sense_tip(Vec3::Zero(), m, static_cast<std::uint64_t>(i))).squaredNorm();
  EXPECT_NEAR(std::sqrt(sq / (3.0 * n)), m.position_noise_sigma_mm, 0.01);
}

TEST(Sensor, SeededStreams) {
  SensorModel a, b, c;
  a.seed = b.seed = 3;
  c.seed = 4;
  bool differs = false;
  for (std::uint64_t i = 0; i < 200; ++i) {
    EXPECT_EQ(sense_tip(Vec3(1, 2, 3), a, i), sense_tip(Vec3(1, 2, 3), b, i));
    differs = differs || sense_tip(Vec3(1, 2, 3), a, i) != sense_tip(Vec3(1, 2, 3), c, i);
  }
  EXPECT_TRUE(differs);
}

TEST(Sensor, QuantizedOutput) {
  SensorModel m;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Vec3 r = sense_tip(Vec3(0.123, 4.567, 8.9), m, i);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(r[k] / 0.01, std::round(r[k] / 0.01), 1e-6);
  }
}

TEST(Sensor, SampleIndexAtRate) {
  SensorModel m;
  EXPECT_EQ(sample_index_at(0.0, m), 0u);
  EXPECT_EQ(sample_index_at(0.024, m), 0u);
  EXPECT_EQ(sample_index_at(0.025, m), 1u);
  EXPECT_EQ(sample_index_at(1.0, m), 40u);
}

TEST(CounterRng, PureFunctionOfCounter) {
  const CounterRng r{11, 2};
  EXPECT_EQ(r.bits(5), r.bits(5));
  EXPECT_NE(r.bits(5), r.bits(6));
  EXPECT_NE(r.bits(5), (CounterRng{11, 3}.bits(5)));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = r.uniform(i);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Plane, BasisIsRightHanded) {
  const Plane p{Vec3(0, 0, 50), Vec3(0, 0, -1)};
  EXPECT_LT((p.u_axis() - Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((p.v_axis() - Vec3(0, -1, 0)).norm(), 1e-12);
  EXPECT_LT((p.u_axis().cross(p.v_axis()) - p.normal).norm(), 1e-12);
  const Vec2 uv(3, -7);
  EXPECT_LT((p.to_surface(p.to_world(uv)) - uv).norm(), 1e-12);
  const Plane x{Vec3::Zero(), Vec3::UnitX()};
  EXPECT_LT((x.u_axis().cross(x.v_axis()) - x.normal).norm(), 1e-12);
}
