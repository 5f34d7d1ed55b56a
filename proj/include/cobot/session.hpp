#ifndef COBOT_SESSION_HPP
#define COBOT_SESSION_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cobot/control.hpp"
#include "cobot/intent_feedback.hpp"
#include "cobot/kinematics.hpp"
#include "cobot/protocol.hpp"
#include "cobot/scene_task.hpp"

namespace cobot {

struct SessionSettings {
  double dt = 0.01;
  double haptic_rate = 50.0;  // Hz
  double timeout = 120.0;     // simulated s
  bool autonomy = false;
  ControlScheme scheme = ControlScheme::Adaptive;
  bool visual = true;
  bool haptic = true;
  std::uint64_t seed = 42;
};

/// Everything needed to reproduce one experiment.
struct SessionConfig {
  std::string name = "default";
  ArmModeld arm = defaultArmModel<double>();
  SceneConfig scene;
  PlannerSettings planner;
  TaskTolerances tolerances;
  ControlSettings control;
  FeedbackSettings feedback;
  SessionSettings session;

  /// Throws ConfigError.
  void validate() const;
  /// Ticks between feedback emissions.
  std::uint64_t feedbackInterval() const;
  std::string sessionId() const;
  /// "autonomy", "cardinal" or "adaptive".
  std::string schemeLabel() const;
};

struct MetricsReport {
  std::string scheme;
  int switch_count = 0;
  double completion_time = 0.0;  // simulated s
  double path_length = 0.0;      // m
  std::array<double, kNumActuators> duty_cycle{};
  bool success = false;

  bool operator==(const MetricsReport&) const = default;
};

/// Source of user input samples, polled once per tick.
class InputSource {
 public:
  virtual ~InputSource() = default;
  /// Latest sample that arrived up to `tick`; older pending samples are dropped.
  virtual std::optional<InputSample> take(std::uint64_t tick) = 0;
};

/// Replays the Input messages of a recorded session at the ticks they were consumed.
class RecordedInputSource : public InputSource {
 public:
  explicit RecordedInputSource(const std::vector<protocol::Message>& log);
  std::optional<InputSample> take(std::uint64_t tick) override;

 private:
  std::vector<std::pair<std::uint64_t, InputSample>> inputs_;
  std::size_t next_ = 0;
};

struct SessionHooks {
  /// Called before each simulated tick; returning a reason ends the session with Bye{reason}.
  std::function<std::optional<std::string>(std::uint64_t tick)> before_tick;
  /// Every message, in order, as it is produced.
  std::function<void(const protocol::Message&)> on_message;
};

struct SessionResult {
  std::vector<protocol::Message> log;
  MetricsReport report;
  TaskState task;
  std::string end_reason;
};

/// Runs the fixed-step loop. With `input == nullptr` the user is driven by
/// scriptedUser (ignored in autonomy mode). Throws ConfigError, Unreachable, Infeasible.
SessionResult runSession(const SessionConfig& cfg, InputSource* input = nullptr, const SessionHooks& hooks = {});

/// Recomputes the report from a session log. Throws ParseError if the log does not start with Hello.
MetricsReport computeMetrics(const std::vector<protocol::Message>& log);
MetricsReport computeMetrics(const std::string& log_path);

}  // namespace cobot

#endif  // COBOT_SESSION_HPP
