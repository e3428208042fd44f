#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coilpilot/error.hpp"
#include "coilpilot/replay.hpp"
#include "coilpilot/scenarios.hpp"

namespace fs = std::filesystem;
using namespace coilpilot;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "coilpilot_it" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

class EveryScenario : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(EveryScenario, RerunIsBitIdentical) {
  const std::string name = GetParam();
  const Config cfg;
  const auto a = fresh_dir(name + "_a");
  const auto b = fresh_dir(name + "_b");
  const auto ra = run_scenario(name, cfg, a.string());
  const auto rb = run_scenario(name, cfg, b.string());
  EXPECT_EQ(ra.summary, rb.summary);
  ASSERT_EQ(ra.files, rb.files);
  for (const auto& f : ra.files) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_FALSE(slurp(a / "telemetry.csv").empty());
}

TEST_P(EveryScenario, SummaryIsReplayOfTelemetry) {
  const std::string name = GetParam();
  const auto dir = fresh_dir(name + "_replay");
  run_scenario(name, Config{}, dir.string());
  const std::string summary = slurp(dir / "summary.json");
  const json first = replay::replay_file((dir / "telemetry.csv").string());
  EXPECT_EQ(replay::dump_summary(first), summary);
  EXPECT_EQ(replay::dump_summary(replay::replay_file((dir / "telemetry.csv").string())), summary);
  EXPECT_EQ(load_config((dir / "config.json").string()).seed, Config{}.seed);
}

INSTANTIATE_TEST_SUITE_P(Scenarios, EveryScenario, ::testing::ValuesIn(scenario_names()),
                         [](const auto& info) {
                           std::string n = info.param;
                           for (auto& c : n) c = c == '-' ? '_' : c;
                           return n;
                         });

TEST(Scenarios, SeedChangesNoisyTelemetry) {
  Config cfg;
  const auto a = fresh_dir("seed_a");
  const auto b = fresh_dir("seed_b");
  run_scenario("path-trace", cfg, a.string());
  cfg.seed = 2;
  cfg.environment.sensor.seed = 2;
  run_scenario("path-trace", cfg, b.string());
  EXPECT_NE(slurp(a / "telemetry.csv"), slurp(b / "telemetry.csv"));
}

TEST(Scenarios, ImplantReplaysFromCommandLog) {
  const auto a = fresh_dir("implant_scripted");
  const auto b = fresh_dir("implant_logged");
  run_scenario("implant", Config{}, a.string());
  Config cfg;
  cfg.scenarios.implant.command_file = (a / "commands.ndjson").string();
  run_scenario("implant", cfg, b.string());
  EXPECT_EQ(slurp(a / "telemetry.csv"), slurp(b / "telemetry.csv"));
  EXPECT_EQ(slurp(a / "commands.ndjson"), slurp(b / "commands.ndjson"));
}

TEST(Scenarios, TruncatedTelemetryIsSchemaMismatch) {
  const auto dir = fresh_dir("truncated");
  run_scenario("mechanics-sweep", Config{}, dir.string());
  std::string text = slurp(dir / "telemetry.csv");
  text.erase(text.rfind("# end"));
  const auto cut = dir / "cut.csv";
  std::ofstream(cut, std::ios::binary) << text.substr(0, text.size() / 2);
  try {
    replay::replay_file(cut.string());
    FAIL() << "expected schema-mismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(Scenarios, UnknownScenarioRejected) {
  const auto dir = fresh_dir("unknown");
  EXPECT_THROW(run_scenario("juggle", Config{}, dir.string()), Error);
}
