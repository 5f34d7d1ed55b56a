#include "cobot/scene_task.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace cobot {

namespace {

constexpr std::array<std::string_view, kNumPhases> kPhaseNames = {
    "approach_pick", "descend", "grasp", "lift", "transport", "lower", "release", "retreat", "done"};

double horizontalDistance(const Eigen::Vector3d& a, const Eigen::Vector2d& b) {
  return (a.head<2>() - b).norm();
}

double angularDistance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  return a.angularDistance(b);
}

}  // namespace

std::string_view phaseName(Phase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }

std::optional<Phase> parsePhase(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i)
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  return std::nullopt;
}

bool isGraspedPhase(Phase p) {
  return p == Phase::Grasp || p == Phase::Lift || p == Phase::Transport || p == Phase::Lower;
}

Posed SceneConfig::initialBlockPose() const {
  Posed p;
  p.position = Eigen::Vector3d(block.xy.x(), block.xy.y(), table.height + 0.5 * block.side);
  p.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(block.yaw, Eigen::Vector3d::UnitZ()));
  return p;
}

void SceneConfig::validate() const {
  if (!(table.x_min < table.x_max && table.y_min < table.y_max))
    throw ConfigError("table bounds are empty");
  if (!(block.side > 0.0)) throw ConfigError("block side must be > 0");
  if (!(target.radius > 0.0)) throw ConfigError("target radius must be > 0");
  if (!(keepout_radius >= 0.0)) throw ConfigError("keep-out radius must be >= 0");

  const double half = 0.5 * block.side * std::numbers::sqrt2;
  auto inside = [&](const Eigen::Vector2d& c, double r) {
    return c.x() - r >= table.x_min && c.x() + r <= table.x_max && c.y() - r >= table.y_min &&
           c.y() + r <= table.y_max;
  };
  if (!inside(block.xy, half)) throw ConfigError("block does not lie on the table");
  if (!inside(target.center, target.radius)) throw ConfigError("target area leaves the table");
  if ((block.xy - target.center).norm() <= half + target.radius)
    throw ConfigError("block and target area overlap initially");
  if (!home.allFinite()) throw ConfigError("home configuration is not finite");
}

TrapezoidProfile TrapezoidProfile::fastest(double max_rate, double max_accel) {
  TrapezoidProfile p;
  p.accel = max_accel;
  if (max_rate * max_rate / max_accel <= 1.0) {
    p.peak_rate = max_rate;
    p.ramp_time = max_rate / max_accel;
    p.duration = 1.0 / max_rate + p.ramp_time;
  } else {
    p.ramp_time = std::sqrt(1.0 / max_accel);
    p.peak_rate = max_accel * p.ramp_time;
    p.duration = 2.0 * p.ramp_time;
  }
  return p;
}

TrapezoidProfile TrapezoidProfile::hold(double duration) {
  TrapezoidProfile p;
  p.duration = duration;
  return p;
}

double TrapezoidProfile::progress(double t) const {
  if (peak_rate == 0.0) return 0.0;
  if (t <= 0.0) return 0.0;
  if (t >= duration) return 1.0;
  if (t < ramp_time) return 0.5 * accel * t * t;
  const double remaining = duration - t;
  if (remaining < ramp_time) return 1.0 - 0.5 * accel * remaining * remaining;
  return 0.5 * accel * ramp_time * ramp_time + peak_rate * (t - ramp_time);
}

double trapezoidDuration(double length, double v, double a) {
  if (length <= 0.0) return 0.0;
  if (length >= v * v / a) return length / v + v / a;
  return 2.0 * std::sqrt(length / a);
}

std::size_t TrajectoryPlan::segmentIndexAt(double t) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double value, const PlanSegment& s) { return value < s.start_time; });
  if (it == segments.begin()) return 0;
  std::size_t idx = static_cast<std::size_t>(std::distance(segments.begin(), it)) - 1;
  return std::min(idx, segments.size() - 1);
}

Phase TrajectoryPlan::phaseAt(double t) const {
  if (segments.empty()) return Phase::Done;
  if (t >= duration) return segments.back().phase;
  return segments[segmentIndexAt(t)].phase;
}

std::optional<std::pair<double, double>> TrajectoryPlan::phaseSpan(Phase phase) const {
  std::optional<std::pair<double, double>> span;
  for (const auto& s : segments) {
    if (s.phase != phase) continue;
    if (!span) span = std::make_pair(s.start_time, s.endTime());
    else span->second = s.endTime();
  }
  return span;
}

Eigen::Quaterniond graspOrientation() {
  return Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitY()));
}

TrajectoryPlan planPickPlace(const SceneConfig& scene, const ArmModeld& model,
                             const PlannerSettings& settings) {
  scene.validate();
  const auto& lim = settings.limits;
  const double table = scene.table.height;
  const double side = scene.block.side;
  const Eigen::Vector2d bxy = scene.block.xy;
  const Eigen::Vector2d txy = scene.target.center;

  const Eigen::Vector2d base_xy = model.base.position.head<2>();
  if ((txy - base_xy).norm() < scene.keepout_radius + scene.target.radius)
    throw Infeasible("target area overlaps the arm base keep-out disc");

  PlanKeyPoints keys;
  keys.pre_grasp = {bxy.x(), bxy.y(), table + side + settings.clearance};
  keys.grasp = {bxy.x(), bxy.y(), table + 0.5 * side};
  keys.lift = {bxy.x(), bxy.y(), table + settings.transport_height};
  keys.above_target = {txy.x(), txy.y(), table + settings.transport_height};
  keys.place = {txy.x(), txy.y(), table + 0.5 * side};
  keys.retreat = {txy.x(), txy.y(), table + side + settings.clearance};

  const double reach = model.totalReach();
  auto reachable = [&](const Eigen::Vector3d& p) { return (p - model.base.position).norm() <= reach; };
  if (!reachable(keys.pre_grasp) || !reachable(keys.grasp) || !reachable(keys.lift))
    throw Unreachable("block lies outside the arm's reach");
  if (!reachable(keys.above_target) || !reachable(keys.place) || !reachable(keys.retreat))
    throw Unreachable("target lies outside the arm's reach");

  const Posed start = forwardKinematics(model, scene.home);
  const Eigen::Quaterniond down = graspOrientation();

  TrajectoryPlan plan;
  plan.keys = keys;
  double clock = 0.0;
  Posed cursor = start;

  auto addMove = [&](const Eigen::Vector3d& to_pos, const Eigen::Quaterniond& to_rot, Phase phase) {
    Posed to;
    to.position = to_pos;
    to.orientation = to_rot;
    if (cursor.orientation.dot(to.orientation) < 0.0) to.orientation.coeffs() *= -1.0;
    const double length = (to.position - cursor.position).norm();
    const double angle = angularDistance(cursor.orientation, to.orientation);
    if (length == 0.0 && angle == 0.0) return;
    double rate = std::numeric_limits<double>::infinity();
    double accel = std::numeric_limits<double>::infinity();
    if (length > 0.0) {
      rate = std::min(rate, lim.max_linear_speed / length);
      accel = std::min(accel, lim.max_linear_accel / length);
    }
    if (angle > 0.0) {
      rate = std::min(rate, lim.max_angular_speed / angle);
      accel = std::min(accel, lim.max_angular_accel / angle);
    }
    plan.segments.push_back(PlanSegment{clock, cursor, to, phase, TrapezoidProfile::fastest(rate, accel)});
    clock = plan.segments.back().endTime();
    cursor = to;
  };
  auto addDwell = [&](Phase phase) {
    if (settings.dwell <= 0.0) return;
    plan.segments.push_back(PlanSegment{clock, cursor, cursor, phase, TrapezoidProfile::hold(settings.dwell)});
    clock = plan.segments.back().endTime();
  };

  addMove(keys.pre_grasp, down, Phase::ApproachPick);
  addMove(keys.grasp, down, Phase::Descend);
  addDwell(Phase::Grasp);
  addMove(keys.lift, down, Phase::Lift);
  addMove(keys.above_target, down, Phase::Transport);
  addMove(keys.place, down, Phase::Lower);
  addDwell(Phase::Release);
  addMove(keys.retreat, down, Phase::Retreat);
  plan.duration = clock;

  plan.waypoints.push_back(Waypoint{0.0, start, plan.segments.front().phase});
  for (const auto& seg : plan.segments) {
    const double length = (seg.to.position - seg.from.position).norm();
    std::size_t pieces = 1;
    if (!seg.isDwell()) {
      const double peak_speed = length * seg.profile.peak_rate;
      pieces = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(peak_speed * seg.profile.duration / settings.waypoint_spacing)));
    }
    for (std::size_t k = 1; k <= pieces; ++k) {
      const double local = seg.profile.duration * static_cast<double>(k) / static_cast<double>(pieces);
      Waypoint w;
      w.time = (k == pieces) ? seg.endTime() : seg.start_time + local;
      w.pose = (k == pieces) ? seg.to : samplePlan(plan, w.time);
      w.phase = seg.phase;
      plan.waypoints.push_back(w);
    }
  }
  return plan;
}

Posed samplePlan(const TrajectoryPlan& plan, double t) {
  if (!(t >= 0.0 && t <= plan.duration) || plan.segments.empty())
    throw OutOfRange("plan time outside [0, duration]");
  const PlanSegment& seg = plan.segments[plan.segmentIndexAt(t)];
  const double s = seg.profile.progress(t - seg.start_time);
  if (seg.isDwell() || s <= 0.0) return seg.isDwell() ? seg.to : seg.from;
  if (s >= 1.0) return seg.to;
  Posed p;
  p.position = (1.0 - s) * seg.from.position + s * seg.to.position;
  p.orientation = seg.from.orientation.slerp(s, seg.to.orientation).normalized();
  return p;
}

TaskState TaskState::initial(const SceneConfig& scene) {
  TaskState s;
  s.block = scene.initialBlockPose();
  return s;
}

double blockBottom(const Posed& block, double side) {
  const Eigen::Matrix3d r = block.orientation.toRotationMatrix();
  const double extent = 0.5 * side * (std::abs(r(2, 0)) + std::abs(r(2, 1)) + std::abs(r(2, 2)));
  return block.position.z() - extent;
}

Posed carriedBlockPose(const Posed& ee, const Eigen::Isometry3d& offset) {
  return Posed::fromIsometry(ee.isometry() * offset);
}

TaskStepResult stepTask(const TaskState& state, const SceneConfig& scene, const Posed& ee,
                        bool gripper_closed, const PlannerSettings& planner, const TaskTolerances& tol) {
  TaskStepResult out{state, {}};
  TaskState& s = out.state;
  if (s.grasped) s.block = carriedBlockPose(ee, s.grasp_offset);

  const double table = scene.table.height;
  const double side = scene.block.side;
  const double bottom = blockBottom(s.block, side);
  const bool block_on_target = horizontalDistance(s.block.position, scene.target.center) <= scene.target.radius;

  auto advance = [&](Phase next, std::string name) {
    out.events.push_back(TaskEvent{std::move(name), s.phase, next});
    s.phase = next;
  };

  switch (s.phase) {
    case Phase::ApproachPick: {
      const Eigen::Vector3d pre = s.block.position + Eigen::Vector3d(0, 0, 0.5 * side + planner.clearance);
      if ((ee.position - pre).norm() <= tol.approach) advance(Phase::Descend, "at_pregrasp");
      break;
    }
    case Phase::Descend:
      if (gripper_closed && (ee.position - s.block.position).norm() <= tol.grasp) {
        s.grasped = true;
        s.grasp_offset = ee.isometry().inverse() * s.block.isometry();
        advance(Phase::Grasp, "grasped");
      }
      break;
    case Phase::Grasp:
      if (bottom - table >= tol.lift) advance(Phase::Lift, "lifted");
      break;
    case Phase::Lift:
      if (ee.position.z() >= table + planner.transport_height - tol.transport)
        advance(Phase::Transport, "at_transport_height");
      break;
    case Phase::Transport:
      if (horizontalDistance(ee.position, scene.target.center) <= tol.transport)
        advance(Phase::Lower, "above_target");
      break;
    case Phase::Lower:
      if (!gripper_closed && bottom - table <= tol.resting && block_on_target) {
        s.grasped = false;
        s.block.position.z() += table - bottom;  // settle onto the table
        advance(Phase::Release, "released");
      }
      break;
    case Phase::Release:
      if (!gripper_closed && block_on_target) advance(Phase::Retreat, "placed");
      break;
    case Phase::Retreat:
      if ((ee.position - s.block.position).norm() >= tol.retreat) advance(Phase::Done, "done");
      break;
    case Phase::Done:
      break;
  }
  return out;
}

}  // namespace cobot
