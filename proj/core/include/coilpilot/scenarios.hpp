#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coilpilot/config.hpp"

namespace coilpilot {

const std::vector<std::string>& scenario_names();

struct ScenarioResult {
  nlohmann::json summary;
  std::vector<std::string> files;  // written under the output directory
};

// Writes telemetry.csv, summary.json (the replay of telemetry.csv) and
// config.json into out_dir, plus scenario-specific extras. Throws Error.
ScenarioResult run_scenario(const std::string& name, const Config& cfg, const std::string& out_dir);

// The error record written as error.json when a run fails.
nlohmann::json error_record(const std::string& scenario, const std::exception& e);

}  // namespace coilpilot
