#include <benchmark/benchmark.h>

#include "coilpilot/kinematics.hpp"

using namespace coilpilot;
using namespace coilpilot::kinematics;

static void BM_TipFromPressures(benchmark::State& state) {
  const ActuatorSpec spec;
  PressureVector p(30.0, 55.0, 70.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tip_from_pressures(p, spec));
    p[0] = p[0] < 99.0 ? p[0] + 0.001 : 30.0;
  }
}
BENCHMARK(BM_TipFromPressures);

static void BM_PressureJacobian(benchmark::State& state) {
  const ActuatorSpec spec;
  const PressureVector p(30.0, 55.0, 70.0);
  for (auto _ : state) benchmark::DoNotOptimize(pressure_jacobian(p, spec));
}
BENCHMARK(BM_PressureJacobian);

static void BM_DampedPseudoInverse(benchmark::State& state) {
  const Mat3 j = pressure_jacobian(PressureVector(30.0, 55.0, 70.0), ActuatorSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(damped_pseudo_inverse(j, 0.05));
}
BENCHMARK(BM_DampedPseudoInverse);

static void BM_Backbone(benchmark::State& state) {
  const auto arc = arc_from_lengths(LengthVector(40.0, 50.0, 60.0), ActuatorSpec{});
  for (auto _ : state) benchmark::DoNotOptimize(backbone_polyline(arc, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Backbone)->Arg(21)->Arg(101);
