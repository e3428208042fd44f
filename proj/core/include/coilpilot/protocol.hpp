#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace coilpilot::protocol {

enum class Action {
  kLoadAnchor,
  kCouple,
  kJog,
  kEngagePath,
  kPause,
  kManualOverride,
  kRotateDriver,
  kReleaseCheck,
  kReset,
};
std::string_view to_string(Action action);

struct Command {
  Action action = Action::kPause;
  std::optional<std::int64_t> sequence;
  std::optional<double> sim_time;  // apply at the first control tick at or after this time
  nlohmann::json args = nlohmann::json::object();
};

// Validates a `{"kind":"command", ...}` frame. Throws Error(kProtocol).
Command parse_command(const nlohmann::json& frame);
Command parse_command_line(std::string_view line);

nlohmann::json to_json(const Command& cmd);

// Outbound frames. `sequence` is assigned by the sender.
nlohmann::json make_message(std::string_view kind, std::int64_t sequence, double sim_time,
                            nlohmann::json payload);
nlohmann::json make_error(std::int64_t sequence, double sim_time, std::string_view code,
                          std::string_view message,
                          std::optional<std::int64_t> in_reply_to = std::nullopt);

}  // namespace coilpilot::protocol
