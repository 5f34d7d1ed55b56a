// cobot_sim: live sessions, scripted benchmarks, replay, metrics and config checks.

#include <chrono>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cobot/config.hpp"
#include "cobot/live_server.hpp"
#include "cobot/scenario.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

struct Common {
  std::string config;
  std::string scheme;
  bool autonomy = false;
  std::string feedback;
  std::optional<std::uint64_t> seed;
  std::string out = "session.cobotlog";
};

void addCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario file (defaults built in when omitted)");
  cmd->add_option("--scheme", c.scheme, "control scheme")->check(CLI::IsMember({"cardinal", "adaptive"}));
  cmd->add_flag("--autonomy", c.autonomy, "let the planner drive the arm");
  cmd->add_option("--feedback", c.feedback, "feedback channels")->check(CLI::IsMember({"both", "visual", "haptic", "none"}));
  cmd->add_option("--seed", c.seed, "session seed");
  cmd->add_option("--out", c.out, "session log path")->capture_default_str();
}

cobot::SessionConfig resolve(const Common& c) {
  cobot::SessionConfig cfg = c.config.empty() ? cobot::SessionConfig{} : cobot::loadConfig(c.config);
  if (!c.scheme.empty()) cfg.session.scheme = *cobot::parseScheme(c.scheme);
  if (c.autonomy) cfg.session.autonomy = true;
  if (!c.feedback.empty()) cobot::applyFeedbackFlag(cfg, c.feedback);
  if (c.seed) cfg.session.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void printReport(const cobot::MetricsReport& r) { std::cout << cobot::reportToJson(r); }

int cmdScript(const Common& c, const std::string& inputs_path) {
  const cobot::SessionConfig cfg = resolve(c);
  std::optional<cobot::RecordedInputSource> recorded;
  if (!inputs_path.empty()) recorded.emplace(cobot::protocol::readLog(inputs_path));
  const auto run = cobot::runScenario(cfg, c.out, recorded ? &*recorded : nullptr);
  printReport(run.session.report);
  std::cerr << "log: " << run.log_path << "\nreport: " << run.report_path << "\n";
  return run.session.report.success ? cobot::kExitOk : cobot::kExitFailed;
}

int cmdRun(const Common& c, std::uint16_t port, double wait_s) {
  const cobot::SessionConfig cfg = resolve(c);
  cobot::live::LiveServer server(port);
  std::cerr << "listening on 127.0.0.1:" << server.port() << " (raw lines or WebSocket)\n";
  if (!cfg.session.autonomy) {
    std::cerr << "waiting for a client...\n";
    if (!server.waitForClient(std::chrono::milliseconds(static_cast<long long>(wait_s * 1000)))) {
      std::cerr << "no client connected\n";
      return cobot::kExitFailed;
    }
  }

  const auto start = std::chrono::steady_clock::now();
  cobot::SessionHooks hooks;
  hooks.before_tick = [&](std::uint64_t tick) -> std::optional<std::string> {
    if (g_interrupted) return "interrupted";
    // Pace the simulated clock against wall time only here, at the transport boundary.
    std::this_thread::sleep_until(start + std::chrono::duration<double>(static_cast<double>(tick) * cfg.session.dt));
    return std::nullopt;
  };
  hooks.on_message = [&](const cobot::protocol::Message& m) { server.broadcast(m); };

  const auto result = cobot::runSession(cfg, cfg.session.autonomy ? nullptr : &server.inputs(), hooks);
  server.flush(std::chrono::seconds(2));
  server.stop();

  cobot::protocol::record(result.log, c.out);
  std::ofstream(cobot::reportPathFor(c.out)) << cobot::reportToJson(result.report);
  printReport(result.report);
  return result.report.success ? cobot::kExitOk : cobot::kExitFailed;
}

int cmdReplay(const std::string& log, double speed, std::uint16_t port, bool serve) {
  if (!serve) {
    cobot::protocol::replay(log, speed, [](const cobot::protocol::Message& m) {
      std::cout << cobot::protocol::encode(m) << "\n";
    });
    return cobot::kExitOk;
  }
  cobot::live::LiveServer server(port);
  std::cerr << "replaying on 127.0.0.1:" << server.port() << ", waiting for a client...\n";
  server.waitForClient(std::chrono::hours(24));
  cobot::protocol::replay(log, speed, [&](const cobot::protocol::Message& m) { server.broadcast(m); });
  server.flush(std::chrono::seconds(2));
  return cobot::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, [](int) { g_interrupted = true; });

  CLI::App app{"Cobot intent-feedback simulator"};
  app.require_subcommand(1);

  Common common;
  std::uint16_t port = cobot::protocol::kDefaultPort;
  double wait_s = 600.0;
  auto* run = app.add_subcommand("run", "serve a live session to UI clients");
  addCommon(run, common);
  run->add_option("--port", port, "listen port (0 picks one)")->capture_default_str();
  run->add_option("--wait", wait_s, "seconds to wait for the first client")->capture_default_str();

  std::string inputs_path;
  auto* script = app.add_subcommand("script", "headless run with the scripted user (or autonomy)");
  addCommon(script, common);
  script->add_option("--inputs", inputs_path, "drive the session with the Input messages of a recorded log");

  std::string log_path;
  double speed = 0.0;
  bool serve = false;
  auto* replay = app.add_subcommand("replay", "re-emit a recorded log");
  replay->add_option("log", log_path, "session log")->required();
  replay->add_option("--speed", speed, "pacing multiplier, 0 = as fast as possible")->capture_default_str();
  replay->add_flag("--serve", serve, "stream to connected clients instead of stdout");
  replay->add_option("--port", port, "listen port when serving")->capture_default_str();

  auto* metrics = app.add_subcommand("metrics", "recompute the report from a log");
  metrics->add_option("log", log_path, "session log")->required();

  std::string check_path;
  auto* check = app.add_subcommand("check", "validate a scenario file");
  check->add_option("--config", check_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmdRun(common, port, wait_s);
    if (*script) return cmdScript(common, inputs_path);
    if (*replay) return cmdReplay(log_path, speed, port, serve);
    if (*metrics) {
      printReport(cobot::computeMetrics(log_path));
      return cobot::kExitOk;
    }
    if (*check) {
      std::string message;
      const int code = cobot::checkConfig(check_path, message);
      (code == cobot::kExitOk ? std::cout : std::cerr) << message << "\n";
      return code;
    }
  } catch (const cobot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cobot::kExitConfig;
  } catch (const cobot::Infeasible& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cobot::kExitConfig;
  } catch (const cobot::Unreachable& e) {
    std::cerr << "unreachable: " << e.what() << "\n";
    return cobot::kExitUnreachable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cobot::kExitFailed;
  }
  return cobot::kExitFailed;
}
