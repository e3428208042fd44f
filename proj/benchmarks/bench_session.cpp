#include <benchmark/benchmark.h>

#include "coilpilot/session.hpp"

using namespace coilpilot;

static void BM_SessionStep(benchmark::State& state) {
  Session session{Config{}};
  protocol::Command engage;
  engage.action = protocol::Action::kEngagePath;
  engage.args = {{"path_id", "annulus"}};
  session.submit(engage);
  for (auto _ : state) session.step();
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SessionStep);

static void BM_StatePayload(benchmark::State& state) {
  Session session{Config{}};
  session.run_until_tick(100);
  for (auto _ : state) benchmark::DoNotOptimize(session.state_payload().dump());
}
BENCHMARK(BM_StatePayload);
