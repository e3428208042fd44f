#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coilpilot/telemetry.hpp"

namespace coilpilot::replay {

enum class Schema { kMechanicsSweep, kContactTest, kPathTrace, kSession, kTorqueSessions, kDeployTrace };
std::string_view to_string(Schema schema);

// Fixed column order of each telemetry file.
const std::vector<std::string>& columns(Schema schema);

// Matches the header exactly; throws kSchemaMismatch otherwise.
Schema detect_schema(const telemetry::CsvTable& table);

nlohmann::json summarize(const telemetry::CsvTable& table);

// read_csv + summarize.
nlohmann::json replay_file(const std::string& path);

// Canonical text of a summary (what summary.json holds).
std::string dump_summary(const nlohmann::json& summary);

}  // namespace coilpilot::replay
