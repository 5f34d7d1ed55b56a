#include "cobot/scenario.hpp"

#include <fstream>

#include <json.hpp>

#include "cobot/config.hpp"

namespace cobot {

void applyFeedbackFlag(SessionConfig& cfg, std::string_view flag) {
  if (flag == "both") {
    cfg.session.visual = cfg.session.haptic = true;
  } else if (flag == "visual") {
    cfg.session.visual = true;
    cfg.session.haptic = false;
  } else if (flag == "haptic") {
    cfg.session.visual = false;
    cfg.session.haptic = true;
  } else if (flag == "none") {
    cfg.session.visual = cfg.session.haptic = false;
  } else {
    throw ConfigError("--feedback must be one of both|visual|haptic|none");
  }
}

std::string reportPathFor(const std::string& log_path) {
  std::string base = log_path;
  const std::string ext(protocol::kLogExtension);
  if (base.size() >= ext.size() && base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
    base.resize(base.size() - ext.size());
  return base + ".report.json";
}

std::string reportToJson(const MetricsReport& r) {
  nlohmann::json j = {{"scheme", r.scheme},
                      {"switch_count", r.switch_count},
                      {"completion_time", r.completion_time},
                      {"path_length", r.path_length},
                      {"duty_cycle", r.duty_cycle},
                      {"success", r.success}};
  return j.dump(2) + "\n";
}

ScenarioRun runScenario(const SessionConfig& cfg, const std::string& log_path, InputSource* inputs) {
  ScenarioRun run;
  run.session = runSession(cfg, inputs);
  run.log_path = log_path;
  run.report_path = reportPathFor(log_path);
  protocol::record(run.session.log, log_path);
  std::ofstream out(run.report_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report '" + run.report_path + "'");
  out << reportToJson(run.session.report);
  if (!out) throw IoError("cannot write report '" + run.report_path + "'");
  return run;
}

int checkConfig(const std::string& path, std::string& message) {
  try {
    const SessionConfig cfg = loadConfig(path);
    const TrajectoryPlan plan = planPickPlace(cfg.scene, cfg.arm, cfg.planner);
    message = "ok: '" + cfg.name + "' plans " + std::to_string(plan.waypoints.size()) + " waypoints over " +
              std::to_string(plan.duration) + " s";
    return kExitOk;
  } catch (const ConfigError& e) {
    message = std::string("config error: ") + e.what();
    return kExitConfig;
  } catch (const Infeasible& e) {
    message = std::string("config error: ") + e.what();
    return kExitConfig;
  } catch (const Unreachable& e) {
    message = std::string("unreachable: ") + e.what();
    return kExitUnreachable;
  }
}

}  // namespace cobot
