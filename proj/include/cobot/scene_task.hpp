#ifndef COBOT_SCENE_TASK_HPP
#define COBOT_SCENE_TASK_HPP

#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cobot/kinematics.hpp"

namespace cobot {

struct TableConfig {
  double height = 0.0;
  double x_min = -0.30;
  double x_max = 0.90;
  double y_min = -0.70;
  double y_max = 0.70;
};

struct BlockConfig {
  Eigen::Vector2d xy{0.45, -0.20};
  double side = 0.05;
  double yaw = 0.0;
};

struct TargetConfig {
  Eigen::Vector2d center{0.40, 0.22};
  double radius = 0.02;
};

/// Table, blue block, red target disc and the arm's start configuration.
struct SceneConfig {
  TableConfig table;
  BlockConfig block;
  TargetConfig target;
  double keepout_radius = 0.15;  // disc around the arm base the target may not overlap
  JointConfigd home = (JointConfigd() << 0.0, 0.3, 0.0, 1.6, 0.0, std::numbers::pi - 1.9, 0.0).finished();

  /// Block resting on the table, center pose.
  Posed initialBlockPose() const;
  /// Throws ConfigError on broken scene invariants.
  void validate() const;
};

enum class Phase { ApproachPick, Descend, Grasp, Lift, Transport, Lower, Release, Retreat, Done };

inline constexpr int kNumPhases = 9;

std::string_view phaseName(Phase p);
std::optional<Phase> parsePhase(std::string_view name);
/// Phases during which the gripper holds the block.
bool isGraspedPhase(Phase p);

struct MotionLimits {
  double max_linear_speed = 0.15;   // m/s
  double max_linear_accel = 0.5;    // m/s^2
  double max_angular_speed = 0.8;   // rad/s
  double max_angular_accel = 2.0;   // rad/s^2
};

struct PlannerSettings {
  MotionLimits limits;
  double clearance = 0.10;            // pre-grasp height above block top
  double transport_height = 0.25;     // above table
  double dwell = 0.5;                 // grasp and release dwell, s
  double waypoint_spacing = 0.05;     // max distance between consecutive waypoints, m
};

/// Unit-length trapezoidal (or triangular) timing law s(t) in [0, 1].
struct TrapezoidProfile {
  double duration = 0.0;
  double peak_rate = 0.0;    // ds/dt at cruise
  double accel = 0.0;        // d2s/dt2 during ramps
  double ramp_time = 0.0;

  /// Fastest profile covering a unit path with the given rate and acceleration bounds.
  static TrapezoidProfile fastest(double max_rate, double max_accel);
  /// Constant s = 0 for the given time (a dwell).
  static TrapezoidProfile hold(double duration);

  double progress(double t) const;
};

/// Time for a straight move of `length` with cruise speed `v` and acceleration `a`.
double trapezoidDuration(double length, double v, double a);

struct PlanSegment {
  double start_time = 0.0;
  Posed from;
  Posed to;
  Phase phase = Phase::ApproachPick;
  TrapezoidProfile profile;

  double endTime() const { return start_time + profile.duration; }
  bool isDwell() const { return profile.peak_rate == 0.0; }
};

struct Waypoint {
  double time = 0.0;
  Posed pose;
  Phase phase = Phase::ApproachPick;
};

/// Key Cartesian points of a pick-and-place motion.
struct PlanKeyPoints {
  Eigen::Vector3d pre_grasp;
  Eigen::Vector3d grasp;
  Eigen::Vector3d lift;
  Eigen::Vector3d above_target;
  Eigen::Vector3d place;
  Eigen::Vector3d retreat;
};

struct TrajectoryPlan {
  std::vector<Waypoint> waypoints;
  std::vector<PlanSegment> segments;
  PlanKeyPoints keys;
  double duration = 0.0;

  /// Index of the segment active at time t (the later one on a boundary).
  std::size_t segmentIndexAt(double t) const;
  Phase phaseAt(double t) const;
  /// [start, end] time span covered by the segments of `phase`, if any.
  std::optional<std::pair<double, double>> phaseSpan(Phase phase) const;
};

/// Downward-facing gripper orientation used for all grasp and place poses.
Eigen::Quaterniond graspOrientation();

TrajectoryPlan planPickPlace(const SceneConfig& scene, const ArmModeld& model,
                             const PlannerSettings& settings = {});

/// Pose on the plan at time t; throws OutOfRange outside [0, duration].
Posed samplePlan(const TrajectoryPlan& plan, double t);

struct TaskTolerances {
  double approach = 0.02;      // EE to pre-grasp point
  double grasp = 0.015;        // EE to grasp point
  double lift = 0.01;          // block bottom above table to count as lifted
  double transport = 0.02;     // from transport height; and horizontal to target center
  double resting = 0.005;      // block bottom above table to count as resting
  double retreat = 0.10;       // EE distance from released block
};

struct TaskState {
  Phase phase = Phase::ApproachPick;
  bool grasped = false;
  Posed block;                              // block center pose, world frame
  Eigen::Isometry3d grasp_offset = Eigen::Isometry3d::Identity();  // EE -> block, fixed while grasped

  static TaskState initial(const SceneConfig& scene);
};

struct TaskEvent {
  std::string name;
  Phase from;
  Phase to;
};

struct TaskStepResult {
  TaskState state;
  std::vector<TaskEvent> events;
};

/// Lowest point of the (possibly rotated) cube.
double blockBottom(const Posed& block, double side);

/// Block pose the EE would carry given the captured offset.
Posed carriedBlockPose(const Posed& ee, const Eigen::Isometry3d& offset);

/// Advances at most one phase per call when that phase's completion predicate holds.
TaskStepResult stepTask(const TaskState& state, const SceneConfig& scene, const Posed& ee,
                        bool gripper_closed, const PlannerSettings& planner = {},
                        const TaskTolerances& tol = {});

}  // namespace cobot

#endif  // COBOT_SCENE_TASK_HPP
