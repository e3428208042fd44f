#include "coilpilot/protocol.hpp"

#include <array>
#include <cmath>
#include <string>

#include "coilpilot/error.hpp"

namespace coilpilot::protocol {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Action, std::string_view>, 9> kActions = {{
    {Action::kLoadAnchor, "load_anchor"},
    {Action::kCouple, "couple"},
    {Action::kJog, "jog"},
    {Action::kEngagePath, "engage_path"},
    {Action::kPause, "pause"},
    {Action::kManualOverride, "manual_override"},
    {Action::kRotateDriver, "rotate_driver"},
    {Action::kReleaseCheck, "release_check"},
    {Action::kReset, "reset"},
}};

[[noreturn]] void reject(const std::string& what) { throw Error(ErrorCode::kProtocol, what); }

double finite_number(const json& frame, const char* key) {
  if (!frame.contains(key) || !frame.at(key).is_number()) {
    reject(std::string("'") + key + "' must be a number");
  }
  const double v = frame.at(key).get<double>();
  if (!std::isfinite(v)) reject(std::string("'") + key + "' must be finite");
  return v;
}

int integer(const json& frame, const char* key) {
  if (!frame.contains(key) || !frame.at(key).is_number_integer()) {
    reject(std::string("'") + key + "' must be an integer");
  }
  return frame.at(key).get<int>();
}

}  // namespace

std::string_view to_string(Action action) {
  for (const auto& [a, name] : kActions) {
    if (a == action) return name;
  }
  return "unknown";
}

Command parse_command(const json& frame) {
  if (!frame.is_object()) reject("frame must be a JSON object");
  if (frame.value("kind", std::string()) != "command") reject("expected kind \"command\"");
  if (!frame.contains("action") || !frame.at("action").is_string()) reject("missing 'action'");

  Command cmd;
  const std::string action = frame.at("action").get<std::string>();
  bool known = false;
  for (const auto& [a, name] : kActions) {
    if (name == action) {
      cmd.action = a;
      known = true;
    }
  }
  if (!known) reject("unknown action '" + action + "'");

  if (frame.contains("sequence")) {
    if (!frame.at("sequence").is_number_integer()) reject("'sequence' must be an integer");
    cmd.sequence = frame.at("sequence").get<std::int64_t>();
  }
  if (frame.contains("sim_time")) {
    const double t = finite_number(frame, "sim_time");
    if (t < 0.0) reject("'sim_time' must be >= 0");
    cmd.sim_time = t;
  }

  switch (cmd.action) {
    case Action::kJog: {
      const int chamber = integer(frame, "chamber");
      if (chamber < 1 || chamber > 3) reject("'chamber' must be 1, 2 or 3");
      cmd.args = {{"chamber", chamber}, {"dp_kpa", finite_number(frame, "dp_kpa")}};
      break;
    }
    case Action::kEngagePath: {
      if (!frame.contains("path_id") || !frame.at("path_id").is_string()) {
        reject("'path_id' must be a string");
      }
      const std::string path = frame.at("path_id").get<std::string>();
      if (path != "circle24" && path != "annulus") {
        reject("unknown path_id '" + path + "' (circle24, annulus)");
      }
      cmd.args = {{"path_id", path}};
      if (frame.contains("site")) {
        if (path != "circle24") reject("'site' only applies to circle24");
        const int site = integer(frame, "site");
        if (site < 1) reject("'site' must be >= 1");
        cmd.args["site"] = site;
      }
      break;
    }
    case Action::kRotateDriver: {
      const double d = finite_number(frame, "dtheta_rad");
      if (d < 0.0) reject("'dtheta_rad' must be >= 0");
      cmd.args = {{"dtheta_rad", d}};
      break;
    }
    case Action::kLoadAnchor:
      if (frame.contains("medium")) {
        if (!frame.at("medium").is_string()) reject("'medium' must be a string");
        const std::string m = frame.at("medium").get<std::string>();
        if (m != "EF30" && m != "tissue") reject("'medium' must be EF30 or tissue");
        cmd.args = {{"medium", m}};
      }
      break;
    default:
      break;
  }
  return cmd;
}

Command parse_command_line(std::string_view line) {
  json frame;
  try {
    frame = json::parse(line);
  } catch (const json::exception& e) {
    reject(std::string("malformed JSON: ") + e.what());
  }
  return parse_command(frame);
}

json to_json(const Command& cmd) {
  json j = {{"kind", "command"}, {"action", std::string(to_string(cmd.action))}};
  if (cmd.sequence) j["sequence"] = *cmd.sequence;
  if (cmd.sim_time) j["sim_time"] = *cmd.sim_time;
  for (const auto& [k, v] : cmd.args.items()) j[k] = v;
  return j;
}

json make_message(std::string_view kind, std::int64_t sequence, double sim_time, json payload) {
  return {{"kind", std::string(kind)},
          {"sequence", sequence},
          {"sim_time", sim_time},
          {"payload", std::move(payload)}};
}

json make_error(std::int64_t sequence, double sim_time, std::string_view code,
                std::string_view message, std::optional<std::int64_t> in_reply_to) {
  json payload = {{"code", std::string(code)}, {"message", std::string(message)}};
  if (in_reply_to) payload["in_reply_to"] = *in_reply_to;
  return make_message("error", sequence, sim_time, std::move(payload));
}

}  // namespace coilpilot::protocol
