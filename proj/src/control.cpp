#include "cobot/control.hpp"

#include <algorithm>
#include <cmath>

namespace cobot {

namespace {

Twistd linearTwist(const Eigen::Vector3d& v) {
  Twistd t;
  t.linear = v;
  return t;
}

Twistd angularTwist(const Eigen::Vector3d& w, double length) {
  Twistd t;
  t.angular = w / length;
  return t;
}

struct AxisCandidate {
  double a1;
  double a2;
};

// Quantized axis pairs, ordered so that a strict-improvement scan prefers smaller
// total magnitude, then axis 1 over axis 2, then positive over negative.
const std::vector<AxisCandidate>& candidates() {
  static const std::vector<AxisCandidate> list = [] {
    constexpr double grid[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    std::vector<AxisCandidate> out;
    for (double a1 : grid)
      for (double a2 : grid) out.push_back({a1, a2});
    std::stable_sort(out.begin(), out.end(), [](const AxisCandidate& x, const AxisCandidate& y) {
      const double mx = std::abs(x.a1) + std::abs(x.a2);
      const double my = std::abs(y.a1) + std::abs(y.a2);
      if (mx != my) return mx < my;
      if (std::abs(x.a2) != std::abs(y.a2)) return std::abs(x.a2) < std::abs(y.a2);
      if ((x.a1 < 0) != (y.a1 < 0)) return x.a1 >= 0;
      return (x.a2 >= 0) && (y.a2 < 0);
    });
    return out;
  }();
  return list;
}

struct BestInput {
  AxisCandidate axes{0.0, 0.0};
  double rate = 0.0;
};

BestInput bestInputFor(const ControlMapping& m, const Eigen::Vector3d& dir, const IkSettingsd& ik) {
  BestInput best;
  if (m.kind != MappingKind::Motion) return best;
  for (const auto& c : candidates()) {
    const Twistd tw = clampTwist(commandedTwist(m, c.a1, c.a2, ik.max_linear_speed), ik);
    const double rate = tw.linear.dot(dir);
    if (rate > best.rate + 1e-12) best = BestInput{c, rate};
  }
  return best;
}

}  // namespace

std::string_view schemeName(ControlScheme s) { return s == ControlScheme::Cardinal ? "cardinal" : "adaptive"; }

std::optional<ControlScheme> parseScheme(std::string_view name) {
  if (name == "cardinal") return ControlScheme::Cardinal;
  if (name == "adaptive") return ControlScheme::Adaptive;
  return std::nullopt;
}

double twistNorm(const Twistd& t, double characteristic_length) {
  return std::sqrt(twistDot(t, t, characteristic_length));
}

double twistDot(const Twistd& a, const Twistd& b, double characteristic_length) {
  const double l2 = characteristic_length * characteristic_length;
  return a.linear.dot(b.linear) + l2 * a.angular.dot(b.angular);
}

std::vector<ControlMapping> cardinalMappings(double characteristic_length) {
  const double l = characteristic_length;
  std::vector<ControlMapping> out;
  out.push_back({"translate X / translate Y", MappingKind::Motion,
                 {linearTwist(Eigen::Vector3d::UnitX()), linearTwist(Eigen::Vector3d::UnitY())}});
  out.push_back({"translate Z / yaw", MappingKind::Motion,
                 {linearTwist(Eigen::Vector3d::UnitZ()), angularTwist(Eigen::Vector3d::UnitZ(), l)}});
  out.push_back({"pitch / roll", MappingKind::Motion,
                 {angularTwist(Eigen::Vector3d::UnitY(), l), angularTwist(Eigen::Vector3d::UnitX(), l)}});
  out.push_back({"gripper", MappingKind::Gripper, {}});
  return out;
}

std::vector<ControlMapping> recommendMappings(const Posed& /*ee*/, const TaskState& /*task*/,
                                              const SceneConfig& /*scene*/, const TrajectoryPlan& plan, double t,
                                              const FeedbackSettings& feedback, const ControlSettings& settings) {
  if (!(t >= 0.0 && t <= plan.duration)) throw OutOfRange("recommendation time outside the plan");
  // Skip forward over dwells until the plan moves again.
  std::optional<LookaheadDirections> la;
  for (double probe = t; probe < plan.duration && !la; probe += feedback.horizon)
    la = lookaheadDirections(plan, probe, feedback.horizon, feedback.hold_threshold);
  if (!la) throw DegeneratePlan("no planned motion remains");

  const Eigen::Vector3d now = la->now.vector();
  Eigen::Vector3d side = la->next.vector() - la->next.vector().dot(now) * now;
  if (side.norm() < 1e-6) {
    const Eigen::Vector3d fallback =
        std::abs(now.z()) > 1.0 - 1e-9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitZ();
    side = fallback - fallback.dot(now) * now;
  }
  side.normalize();
  side = (side - side.dot(now) * now).normalized();  // second pass, nearly parallel inputs lose orthogonality

  std::vector<ControlMapping> out;
  out.push_back({"adaptive", MappingKind::Motion, {linearTwist(now), linearTwist(side)}});
  for (auto& m : cardinalMappings(settings.characteristic_length)) out.push_back(std::move(m));
  return out;
}

ControlState initialControlState(ControlScheme scheme, const std::vector<ControlMapping>& mappings) {
  ControlState s;
  s.scheme = scheme;
  s.mappings = mappings;
  return s;
}

Twistd commandedTwist(const ControlMapping& mapping, double axis1, double axis2, double max_linear_speed) {
  Twistd t;
  if (mapping.kind != MappingKind::Motion) return t;
  t.linear = max_linear_speed * (axis1 * mapping.basis[0].linear + axis2 * mapping.basis[1].linear);
  t.angular = max_linear_speed * (axis1 * mapping.basis[0].angular + axis2 * mapping.basis[1].angular);
  return t;
}

IkStepResult<double> applyInput(const ArmModeld& model, const JointConfigd& q, const ControlMapping& mapping,
                                const InputSample& input, double dt, const IkSettingsd& ik) {
  const double a1 = std::clamp(input.axis1, -1.0, 1.0);
  const double a2 = std::clamp(input.axis2, -1.0, 1.0);
  return ikVelocityStep(model, q, commandedTwist(mapping, a1, a2, ik.max_linear_speed), dt, ik);
}

ControlState switchMode(ControlState state) {
  if (!state.mappings.empty()) state.active = (state.active + 1) % state.mappings.size();
  ++state.switch_count;
  return state;
}

ProgressWindow progressWindow(const TrajectoryPlan& plan, Phase phase) {
  Phase effective = phase;
  if (phase == Phase::Grasp) effective = Phase::Lift;
  if (phase == Phase::Release) effective = Phase::Retreat;
  if (effective == Phase::Done) return {plan.duration, plan.duration};
  if (auto span = plan.phaseSpan(effective)) return {span->first, span->second};
  for (const auto& seg : plan.segments)
    if (static_cast<int>(seg.phase) > static_cast<int>(effective)) return {seg.start_time, seg.start_time};
  return {plan.duration, plan.duration};
}

double trackProgress(const TrajectoryPlan& plan, const Eigen::Vector3d& ee, Phase phase, double previous,
                     double search_window, double step) {
  const ProgressWindow w = progressWindow(plan, phase);
  const double lo = std::clamp(previous, w.start, w.end);
  const double hi = std::min(w.end, lo + search_window);
  double best_t = lo;
  double best_d = (samplePlan(plan, lo).position - ee).norm();
  const auto steps = static_cast<int>(std::ceil((hi - lo) / step));
  for (int k = 1; k <= steps; ++k) {
    const double t = (k == steps) ? hi : lo + step * k;
    const double d = (samplePlan(plan, t).position - ee).norm();
    if (d <= best_d) {
      best_d = d;
      best_t = t;
    }
  }
  return best_t;
}

Eigen::Vector3d referencePoint(const TrajectoryPlan& plan, double t, Phase phase, double horizon) {
  const ProgressWindow w = progressWindow(plan, phase);
  const double target_time = std::min({t + horizon, std::max(w.end, t), plan.duration});
  return samplePlan(plan, target_time).position;
}

InputSample scriptedUser(const Posed& ee, const TrajectoryPlan& plan, double t, const ControlState& state,
                         const SceneConfig& scene, const ScriptedUserContext& ctx,
                         const ControlSettings& settings, const TaskTolerances& tol) {
  InputSample in;
  in.timestamp_ms = ctx.timestamp_ms;
  const double table = scene.table.height;
  const bool block_on_target =
      (ctx.block.position.head<2>() - scene.target.center).norm() <= scene.target.radius;

  switch (ctx.phase) {
    case Phase::ApproachPick:
      if (ctx.gripper_closed) { in.grip_toggle_pressed = true; return in; }
      break;
    case Phase::Descend:
      if (!ctx.gripper_closed && (ee.position - ctx.block.position).norm() <= settings.grasp_reach) {
        in.grip_toggle_pressed = true;
        return in;
      }
      break;
    case Phase::Lower:
      if (ctx.gripper_closed && blockBottom(ctx.block, scene.block.side) - table <= tol.resting &&
          block_on_target) {
        in.grip_toggle_pressed = true;
        return in;
      }
      break;
    case Phase::Done:
      return in;
    default:
      break;
  }

  const Eigen::Vector3d goal = referencePoint(plan, t, ctx.phase, ctx.horizon);
  const Eigen::Vector3d delta = goal - ee.position;
  if (delta.norm() < settings.deadband) return in;
  const Eigen::Vector3d dir = delta.normalized();

  double best_any = 0.0;
  for (const auto& m : state.mappings) best_any = std::max(best_any, bestInputFor(m, dir, settings.ik).rate);
  const BestInput active = bestInputFor(state.activeMapping(), dir, settings.ik);

  if (best_any > 0.0 && active.rate < settings.switch_threshold * best_any) {
    in.mode_switch_pressed = true;
    return in;
  }
  in.axis1 = active.axes.a1;
  in.axis2 = active.axes.a2;
  return in;
}

}  // namespace cobot
