#ifndef COBOT_SCENARIO_HPP
#define COBOT_SCENARIO_HPP

#include <string>
#include <string_view>

#include "cobot/session.hpp"

namespace cobot {

/// CLI exit codes.
enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitConfig = 2, kExitUnreachable = 3 };

/// Applies a `--feedback {both|visual|haptic|none}` value; throws ConfigError on anything else.
void applyFeedbackFlag(SessionConfig& cfg, std::string_view flag);

/// `run.cobotlog` -> `run.report.json`.
std::string reportPathFor(const std::string& log_path);

std::string reportToJson(const MetricsReport& r);

struct ScenarioRun {
  SessionResult session;
  std::string log_path;
  std::string report_path;
};

/// Runs one headless session and writes its log and report next to each other.
/// `inputs == nullptr` drives the session with the scripted user.
ScenarioRun runScenario(const SessionConfig& cfg, const std::string& log_path, InputSource* inputs = nullptr);

/// Validates a config the way `check` does: schema, invariants, and plan feasibility.
/// Returns the exit code and writes a one-line diagnosis to `message`.
int checkConfig(const std::string& path, std::string& message);

}  // namespace cobot

#endif  // COBOT_SCENARIO_HPP
