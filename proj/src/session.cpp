#include "cobot/session.hpp"

#include <cmath>
#include <cstdio>

namespace cobot {

using namespace protocol;

namespace {

constexpr double kPenetrationSlack = 1e-6;

std::vector<WireJoint> wireArm(const ArmModeld& arm) {
  std::vector<WireJoint> out;
  for (const auto& j : arm.joints) {
    WireJoint w;
    w.axis = {j.axis.x(), j.axis.y(), j.axis.z()};
    w.offset = {j.offset.x(), j.offset.y(), j.offset.z()};
    w.lower = j.lower;
    w.upper = j.upper;
    out.push_back(w);
  }
  return out;
}

class Loop {
 public:
  Loop(const SessionConfig& cfg, InputSource* input, const SessionHooks& hooks)
      : cfg_(cfg), input_(input), hooks_(hooks), plan_(planPickPlace(cfg.scene, cfg.arm, cfg.planner)) {
    if (!cfg_.arm.withinLimits(cfg_.scene.home)) throw ConfigError("home configuration violates joint limits");
    q_ = cfg_.scene.home;
    ee_ = forwardKinematics(cfg_.arm, q_);
    task_ = TaskState::initial(cfg_.scene);
    sid_ = cfg_.sessionId();
    interval_ = cfg_.feedbackInterval();

    if (cfg_.session.scheme == ControlScheme::Adaptive && !cfg_.session.autonomy) {
      control_ = initialControlState(ControlScheme::Adaptive,
                                     recommendMappings(ee_, task_, cfg_.scene, plan_, 0.0, cfg_.feedback, cfg_.control));
    } else {
      control_ = initialControlState(cfg_.session.scheme, cardinalMappings(cfg_.control.characteristic_length));
    }
  }

  SessionResult run() {
    emit(0, Hello{kVersion, cfg_.name, cfg_.schemeLabel(), cfg_.session.dt, wireArm(cfg_.arm)});
    emitTickOutputs(0);

    std::uint64_t tick = 0;
    std::string reason;
    while (true) {
      ++tick;
      if (hooks_.before_tick) {
        if (auto stop = hooks_.before_tick(tick)) {
          reason = *stop;
          --tick;
          break;
        }
      }
      advance(tick);
      emitTickOutputs(tick);
      if (task_.phase == Phase::Done) {
        reason = "done";
        break;
      }
      if (elapsed(tick) >= cfg_.session.timeout) {
        reason = "timeout";
        break;
      }
    }

    const double end_time = elapsed(tick);
    emit(tick, Metrics{control_.switch_count, end_time});
    emit(tick, Bye{reason});

    SessionResult result;
    result.log = std::move(log_);
    result.task = task_;
    result.end_reason = reason;
    auto& r = result.report;
    r.scheme = cfg_.schemeLabel();
    r.switch_count = control_.switch_count;
    r.completion_time = end_time;
    r.path_length = path_length_;
    for (std::size_t i = 0; i < kNumActuators; ++i)
      r.duty_cycle[i] = frames_ == 0 ? 0.0 : static_cast<double>(active_counts_[i]) / static_cast<double>(frames_);
    r.success = task_.phase == Phase::Done;
    return result;
  }

 private:
  double elapsed(std::uint64_t tick) const { return static_cast<double>(tick) * cfg_.session.dt; }
  bool userDriven() const { return !cfg_.session.autonomy; }

  void emit(std::uint64_t tick, Payload payload) {
    Message m{sid_, seq_++, tick, std::move(payload)};
    if (hooks_.on_message) hooks_.on_message(m);
    log_.push_back(std::move(m));
  }

  void advance(std::uint64_t tick) {
    const double t = elapsed(tick);
    const double dt = cfg_.session.dt;
    JointConfigd next = q_;

    if (userDriven()) {
      std::optional<InputSample> sample;
      if (input_) {
        sample = input_->take(tick);
      } else {
        ScriptedUserContext ctx{task_.phase, gripper_closed_, task_.block, cfg_.feedback.horizon,
                                static_cast<std::int64_t>(std::llround(t * 1000.0))};
        sample = scriptedUser(ee_, plan_, progress_, control_, cfg_.scene, ctx, cfg_.control, cfg_.tolerances);
      }
      if (sample) {
        emit(tick, Input{*sample});
        held_axes_ = {sample->axis1, sample->axis2};
        if (sample->mode_switch_pressed) {
          control_ = switchMode(std::move(control_));
          emit(tick, ModeSwitch{static_cast<std::uint32_t>(control_.active), control_.activeMapping().label});
        }
        if (sample->grip_toggle_pressed) gripper_closed_ = !gripper_closed_;
      }
      const ControlMapping& mapping = control_.activeMapping();
      if (mapping.kind == MappingKind::Gripper) {
        if (held_axes_[0] > 0.5) gripper_closed_ = true;
        if (held_axes_[0] < -0.5) gripper_closed_ = false;
      } else {
        InputSample held;
        held.axis1 = held_axes_[0];
        held.axis2 = held_axes_[1];
        next = applyInput(cfg_.arm, q_, mapping, held, dt, cfg_.control.ik).q;
      }
    } else {
      const double tr = std::min(t, plan_.duration);
      const Posed ref = samplePlan(plan_, tr);
      Twistd twist;
      twist.linear = (ref.position - ee_.position) / dt;
      twist.angular = orientationError(ee_.orientation, ref.orientation) / dt;
      next = ikVelocityStep(cfg_.arm, q_, twist, dt, cfg_.control.ik).q;
      gripper_closed_ = isGraspedPhase(plan_.phaseAt(tr));
    }

    Posed next_ee = forwardKinematics(cfg_.arm, next);
    if (task_.grasped) {
      const Posed carried = carriedBlockPose(next_ee, task_.grasp_offset);
      if (blockBottom(carried, cfg_.scene.block.side) < cfg_.scene.table.height - kPenetrationSlack) {
        next = q_;  // the held block would be pushed into the table
        next_ee = ee_;
      }
    }
    q_ = next;
    ee_ = next_ee;

    TaskStepResult step = stepTask(task_, cfg_.scene, ee_, gripper_closed_, cfg_.planner, cfg_.tolerances);
    task_ = std::move(step.state);
    for (const auto& e : step.events) emit(tick, TaskEventMsg{e.name});

    if (userDriven()) {
      progress_ = trackProgress(plan_, ee_.position, task_.phase, progress_, cfg_.control.progress_window);
      if (control_.scheme == ControlScheme::Adaptive) {
        try {
          auto list = recommendMappings(ee_, task_, cfg_.scene, plan_, progress_, cfg_.feedback, cfg_.control);
          if (list.size() == control_.mappings.size()) control_.mappings = std::move(list);
        } catch (const DegeneratePlan&) {
          // nothing left to recommend; keep the last suggestions
        }
      }
    } else {
      progress_ = std::min(t, plan_.duration);
    }
  }

  void emitTickOutputs(std::uint64_t tick) {
    const bool any_feedback = cfg_.session.visual || cfg_.session.haptic;
    if (any_feedback && tick % interval_ == 0) {
      const auto ts = static_cast<std::int64_t>(std::llround(elapsed(tick) * 1000.0));
      FeedbackSample fb = computeFeedback(plan_, progress_, ee_, cfg_.feedback, ts);
      const bool hold = !fb.lookahead;
      // On hold nothing is emitted, except one clearing frame when a hold begins.
      if (!hold || !feedback_was_hold_) {
        if (cfg_.session.haptic) {
          emit(tick, Actuators{fb.actuators.intensities, fb.actuators.timestamp_ms,
                               userDriven() ? "recommender" : "plan"});
          ++frames_;
          for (std::size_t i = 0; i < kNumActuators; ++i)
            if (fb.actuators.intensities[i] > 0.0) ++active_counts_[i];
        }
        if (cfg_.session.visual) {
          Arrows arrows;
          for (const auto& g : fb.arrows) arrows.glyphs.push_back(WireArrow::from(g));
          emit(tick, std::move(arrows));
        }
      }
      feedback_was_hold_ = hold;
    }

    SceneState s;
    for (std::size_t i = 0; i < kNumJoints; ++i) s.joints[i] = q_(static_cast<Eigen::Index>(i));
    s.ee = WirePose::from(ee_);
    s.block = WirePose::from(task_.block);
    s.phase = task_.phase;
    s.grasped = task_.grasped;
    s.gripper_closed = gripper_closed_;
    const Eigen::Vector3d pos(s.ee.position[0], s.ee.position[1], s.ee.position[2]);
    if (last_ee_) path_length_ += (pos - *last_ee_).norm();
    last_ee_ = pos;
    emit(tick, s);
  }

  const SessionConfig& cfg_;
  InputSource* input_;
  const SessionHooks& hooks_;
  TrajectoryPlan plan_;
  JointConfigd q_;
  Posed ee_;
  TaskState task_;
  ControlState control_;
  bool gripper_closed_ = false;
  std::array<double, 2> held_axes_{0.0, 0.0};
  double progress_ = 0.0;
  std::string sid_;
  std::uint64_t interval_ = 1;
  std::uint64_t seq_ = 0;
  std::vector<Message> log_;

  bool feedback_was_hold_ = false;
  std::uint64_t frames_ = 0;
  std::array<std::uint64_t, kNumActuators> active_counts_{};
  double path_length_ = 0.0;
  std::optional<Eigen::Vector3d> last_ee_;
};

}  // namespace

void SessionConfig::validate() const {
  arm.validate();
  scene.validate();
  if (!arm.withinLimits(scene.home)) throw ConfigError("home configuration violates joint limits");
  if (session.dt != 0.01) throw ConfigError("session dt must be 0.01 s");
  if (!(session.haptic_rate > 0.0)) throw ConfigError("haptic rate must be > 0");
  const double ratio = 1.0 / (session.haptic_rate * session.dt);
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
    throw ConfigError("haptic rate must divide the simulation rate");
  if (!(session.timeout > 0.0)) throw ConfigError("timeout must be > 0");
  if (!(feedback.horizon > 0.0)) throw ConfigError("lookahead horizon must be > 0");
  if (!(feedback.min_gain > 0.0 && feedback.min_gain <= 1.0)) throw ConfigError("minimum gain must lie in (0, 1]");
  if (!(feedback.arrow_scale > 0.0)) throw ConfigError("arrow scale must be > 0");
  if (std::abs(feedback.alignment.orientation.norm() - 1.0) > 1e-9)
    throw ConfigError("glove alignment must be a unit quaternion");
  if (!(control.ik.damping > 0.0 && control.ik.max_linear_speed > 0.0 && control.ik.max_angular_speed > 0.0))
    throw ConfigError("IK damping and speed limits must be > 0");
  if (!(control.characteristic_length > 0.0)) throw ConfigError("characteristic length must be > 0");
  if (!(control.switch_threshold >= 0.0 && control.switch_threshold <= 1.0))
    throw ConfigError("switch threshold must lie in [0, 1]");
  const auto& lim = planner.limits;
  if (!(lim.max_linear_speed > 0.0 && lim.max_linear_accel > 0.0 && lim.max_angular_speed > 0.0 &&
        lim.max_angular_accel > 0.0))
    throw ConfigError("planner motion limits must be > 0");
  if (!(planner.clearance > 0.0 && planner.transport_height > scene.block.side && planner.dwell >= 0.0 &&
        planner.waypoint_spacing > 0.0))
    throw ConfigError("invalid planner settings");
}

std::uint64_t SessionConfig::feedbackInterval() const {
  return static_cast<std::uint64_t>(std::llround(1.0 / (session.haptic_rate * session.dt)));
}

std::string SessionConfig::sessionId() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (char c : name) mix(static_cast<unsigned char>(c));
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((session.seed >> (8 * i)) & 0xff));
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string SessionConfig::schemeLabel() const {
  return session.autonomy ? "autonomy" : std::string(schemeName(session.scheme));
}

RecordedInputSource::RecordedInputSource(const std::vector<Message>& log) {
  for (const auto& m : log)
    if (const auto* in = m.as<Input>()) inputs_.emplace_back(m.tick, in->sample);
}

std::optional<InputSample> RecordedInputSource::take(std::uint64_t tick) {
  std::optional<InputSample> latest;
  while (next_ < inputs_.size() && inputs_[next_].first <= tick) latest = inputs_[next_++].second;
  return latest;
}

SessionResult runSession(const SessionConfig& cfg, InputSource* input, const SessionHooks& hooks) {
  cfg.validate();
  Loop loop(cfg, input, hooks);
  return loop.run();
}

MetricsReport computeMetrics(const std::vector<Message>& log) {
  if (log.empty() || !log.front().as<Hello>()) throw ParseError("session log must start with Hello");
  const Hello& hello = *log.front().as<Hello>();
  MetricsReport r;
  r.scheme = hello.scheme;
  std::uint64_t frames = 0;
  std::array<std::uint64_t, kNumActuators> active{};
  std::optional<Eigen::Vector3d> last;
  std::uint64_t last_tick = 0;
  for (const auto& m : log) {
    if (m.as<ModeSwitch>()) ++r.switch_count;
    if (const auto* e = m.as<TaskEventMsg>(); e && e->name == "done") r.success = true;
    if (const auto* a = m.as<Actuators>()) {
      ++frames;
      for (std::size_t i = 0; i < kNumActuators; ++i)
        if (a->intensities[i] > 0.0) ++active[i];
    }
    if (const auto* s = m.as<SceneState>()) {
      const Eigen::Vector3d p(s->ee.position[0], s->ee.position[1], s->ee.position[2]);
      if (last) r.path_length += (p - *last).norm();
      last = p;
      last_tick = m.tick;
    }
  }
  r.completion_time = static_cast<double>(last_tick) * hello.dt;
  for (std::size_t i = 0; i < kNumActuators; ++i)
    r.duty_cycle[i] = frames == 0 ? 0.0 : static_cast<double>(active[i]) / static_cast<double>(frames);
  return r;
}

MetricsReport computeMetrics(const std::string& log_path) { return computeMetrics(readLog(log_path)); }

}  // namespace cobot
