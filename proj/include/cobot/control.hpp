#ifndef COBOT_CONTROL_HPP
#define COBOT_CONTROL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cobot/intent_feedback.hpp"
#include "cobot/kinematics.hpp"
#include "cobot/scene_task.hpp"

namespace cobot {

/// One sample of the two-axis input device.
struct InputSample {
  double axis1 = 0.0;  // [-1, 1]
  double axis2 = 0.0;  // [-1, 1]
  bool mode_switch_pressed = false;
  bool grip_toggle_pressed = false;
  std::int64_t timestamp_ms = 0;

  bool operator==(const InputSample&) const = default;
};

enum class MappingKind { Motion, Gripper };

/// Maps the two input axes onto end-effector twists. A gripper mapping carries no
/// motion basis; its axis 1 opens (< 0) or closes (> 0) the gripper.
struct ControlMapping {
  std::string label;
  MappingKind kind = MappingKind::Motion;
  std::array<Twistd, 2> basis{};
};

enum class ControlScheme { Cardinal, Adaptive };
std::string_view schemeName(ControlScheme s);
std::optional<ControlScheme> parseScheme(std::string_view name);

struct ControlState {
  ControlScheme scheme = ControlScheme::Cardinal;
  std::vector<ControlMapping> mappings;
  std::size_t active = 0;
  int switch_count = 0;

  const ControlMapping& activeMapping() const { return mappings.at(active); }
};

struct ControlSettings {
  double characteristic_length = 0.2;  // m, weights angular velocity in the twist norm
  double switch_threshold = 0.25;      // scripted user: fraction of the best achievable progress
  double deadband = 0.002;             // scripted user: distance at which it stops steering, m
  double grasp_reach = 0.003;          // scripted user: closes the gripper this close to the block, m
  double progress_window = 1.0;        // s of plan searched ahead when tracking user progress
  IkSettingsd ik;
};

/// sqrt(|v|^2 + (L |w|)^2).
double twistNorm(const Twistd& t, double characteristic_length);
double twistDot(const Twistd& a, const Twistd& b, double characteristic_length);

/// translate X/Y, translate Z/yaw, pitch/roll, gripper.
std::vector<ControlMapping> cardinalMappings(double characteristic_length = 0.2);

/// Geometric stand-in recommender: one adaptive mapping following the planned
/// path at t, followed by the cardinal mappings. Throws DegeneratePlan when no
/// motion remains ahead of t.
std::vector<ControlMapping> recommendMappings(const Posed& ee, const TaskState& task, const SceneConfig& scene,
                                              const TrajectoryPlan& plan, double t,
                                              const FeedbackSettings& feedback = {},
                                              const ControlSettings& settings = {});

/// Mapping list a scheme starts with.
ControlState initialControlState(ControlScheme scheme, const std::vector<ControlMapping>& mappings);

Twistd commandedTwist(const ControlMapping& mapping, double axis1, double axis2, double max_linear_speed);

IkStepResult<double> applyInput(const ArmModeld& model, const JointConfigd& q, const ControlMapping& mapping,
                                const InputSample& input, double dt, const IkSettingsd& ik = {});

ControlState switchMode(ControlState state);

/// Plan time window the user is expected to work through in a given task phase.
struct ProgressWindow {
  double start = 0.0;
  double end = 0.0;
};
ProgressWindow progressWindow(const TrajectoryPlan& plan, Phase phase);

/// Plan time closest to the EE inside the phase window, never moving backwards.
double trackProgress(const TrajectoryPlan& plan, const Eigen::Vector3d& ee, Phase phase, double previous,
                     double search_window = 1.0, double step = 0.01);

/// Point the user should be heading to: the plan `horizon` seconds ahead, capped at the phase window end.
Eigen::Vector3d referencePoint(const TrajectoryPlan& plan, double t, Phase phase, double horizon);

struct ScriptedUserContext {
  Phase phase = Phase::ApproachPick;
  bool gripper_closed = false;
  Posed block;
  double horizon = 0.5;
  std::int64_t timestamp_ms = 0;
};

/// Deterministic greedy driver standing in for a human at the input device.
InputSample scriptedUser(const Posed& ee, const TrajectoryPlan& plan, double t, const ControlState& state,
                         const SceneConfig& scene, const ScriptedUserContext& ctx,
                         const ControlSettings& settings = {}, const TaskTolerances& tol = {});

}  // namespace cobot

#endif  // COBOT_CONTROL_HPP
