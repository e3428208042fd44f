#include <benchmark/benchmark.h>

#include "coilpilot/config.hpp"
#include "coilpilot/trajectory.hpp"

using namespace coilpilot;

static void BM_SplineDiscretize(benchmark::State& state) {
  const auto set = trajectory::load_target_set(resolve_data_path(Config{}, "annulus15.json"));
  const auto curve = trajectory::spline_path(set);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trajectory::discretize(curve, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_SplineDiscretize)->Arg(100)->Arg(500)->Unit(benchmark::kMicrosecond);
