#include <gtest/gtest.h>

#include <filesystem>

#include "cobot/config.hpp"
#include "cobot/errors.hpp"
#include "cobot/scenario.hpp"
#include "cobot/session.hpp"

using namespace cobot;
using namespace cobot::protocol;

namespace {

SessionConfig autonomyConfig() {
  SessionConfig cfg;
  cfg.session.autonomy = true;
  return cfg;
}

std::string joined(const std::vector<Message>& log) {
  std::string s;
  for (const auto& m : log) s += encode(m) + "\n";
  return s;
}

template <class T>
std::size_t countOf(const std::vector<Message>& log) {
  std::size_t n = 0;
  for (const auto& m : log) n += m.as<T>() != nullptr;
  return n;
}

}  // namespace

TEST(Session, AutonomyCompletes) {
  const auto r = runSession(autonomyConfig());
  EXPECT_EQ(r.end_reason, "done");
  EXPECT_TRUE(r.report.success);
  EXPECT_EQ(r.report.switch_count, 0);
  EXPECT_EQ(r.task.phase, Phase::Done);
  const auto cfg = autonomyConfig();
  EXPECT_LT((r.task.block.position.head<2>() - cfg.scene.target.center).norm(), 0.02);
  ASSERT_TRUE(r.log.front().as<Hello>());
  ASSERT_TRUE(r.log.back().as<Bye>());
  EXPECT_EQ(r.log.back().as<Bye>()->reason, "done");
  bool placed = false;
  for (const auto& m : r.log)
    if (const auto* e = m.as<TaskEventMsg>()) placed |= e->name == "placed";
  EXPECT_TRUE(placed);
}

TEST(Session, HeaderOrdering) {
  for (bool autonomy : {true, false}) {
    auto cfg = autonomyConfig();
    cfg.session.autonomy = autonomy;
    const auto r = runSession(cfg);
    for (std::size_t i = 1; i < r.log.size(); ++i) {
      ASSERT_GT(r.log[i].seq, r.log[i - 1].seq);
      ASSERT_GE(r.log[i].tick, r.log[i - 1].tick);
      ASSERT_EQ(r.log[i].session, r.log[0].session);
    }
  }
}

TEST(Session, DeterministicLogs) {
  for (auto scheme : {ControlScheme::Adaptive, ControlScheme::Cardinal}) {
    SessionConfig cfg;
    cfg.session.scheme = scheme;
    const auto a = runSession(cfg);
    const auto b = runSession(cfg);
    EXPECT_EQ(joined(a.log), joined(b.log));
    // Feeding the recorded inputs back reproduces the session byte for byte.
    RecordedInputSource inputs(a.log);
    const auto c = runSession(cfg, &inputs);
    EXPECT_EQ(joined(a.log), joined(c.log));
  }
}

TEST(Session, FeedbackToggles) {
  for (const char* flag : {"both", "visual", "haptic", "none"}) {
    SessionConfig cfg;
    applyFeedbackFlag(cfg, flag);
    const auto r = runSession(cfg);
    const std::string f = flag;
    EXPECT_EQ(countOf<Actuators>(r.log) > 0, f == "both" || f == "haptic") << f;
    EXPECT_EQ(countOf<Arrows>(r.log) > 0, f == "both" || f == "visual") << f;
    if (f == "none") EXPECT_EQ(r.report.duty_cycle, (std::array<double, kNumActuators>{}));
  }
  SessionConfig cfg;
  EXPECT_THROW(applyFeedbackFlag(cfg, "loud"), ConfigError);
}

TEST(Session, FeedbackCadenceMatchesPlanHolds) {
  const auto cfg = autonomyConfig();
  const auto r = runSession(cfg);
  const auto plan = planPickPlace(cfg.scene, cfg.arm, cfg.planner);
  const std::uint64_t interval = cfg.feedbackInterval();
  ASSERT_EQ(interval, 2u);

  std::vector<std::uint64_t> emitted;
  for (const auto& m : r.log)
    if (m.as<Actuators>()) emitted.push_back(m.tick);

  std::vector<std::uint64_t> expected;
  bool prev_hold = false;
  const std::uint64_t last_tick = r.log.back().tick;
  for (std::uint64_t tick = 0; tick <= last_tick; tick += interval) {
    const double t = std::min(static_cast<double>(tick) * cfg.session.dt, plan.duration);
    const bool hold = !lookaheadDirections(plan, t, cfg.feedback.horizon, cfg.feedback.hold_threshold);
    if (!hold || !prev_hold) expected.push_back(tick);
    prev_hold = hold;
  }
  EXPECT_EQ(emitted, expected);

  // Actuators and Arrows come in pairs, and a clearing frame is all zero with no glyphs.
  std::size_t zero_frames = 0;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    const auto* a = r.log[i].as<Actuators>();
    if (!a) continue;
    ASSERT_LT(i + 1, r.log.size());
    const auto* arrows = r.log[i + 1].as<Arrows>();
    ASSERT_TRUE(arrows);
    const bool zero = a->intensities == std::array<double, kNumActuators>{};
    EXPECT_EQ(zero, arrows->glyphs.empty());
    zero_frames += zero;
  }
  EXPECT_GT(zero_frames, 0u);  // dwells produce holds
}

TEST(Session, MetricsRecomputedFromLog) {
  for (bool autonomy : {true, false}) {
    auto cfg = autonomyConfig();
    cfg.session.autonomy = autonomy;
    const auto r = runSession(cfg);
    const auto m = computeMetrics(r.log);
    EXPECT_EQ(m.scheme, r.report.scheme);
    EXPECT_EQ(m.switch_count, r.report.switch_count);
    EXPECT_EQ(m.success, r.report.success);
    EXPECT_EQ(m.duty_cycle, r.report.duty_cycle);
    EXPECT_DOUBLE_EQ(m.completion_time, r.report.completion_time);
    EXPECT_NEAR(m.path_length, r.report.path_length, 1e-9);
    EXPECT_GT(m.path_length, 0.0);

    const auto path = (std::filesystem::temp_directory_path() / "cobot_test_metrics.cobotlog").string();
    record(r.log, path);
    EXPECT_NEAR(computeMetrics(path).path_length, r.report.path_length, 1e-9);
    std::filesystem::remove(path);
  }
}

TEST(Session, MetricsEdgeCases) {
  EXPECT_THROW(computeMetrics(std::vector<Message>{}), ParseError);
  EXPECT_THROW(computeMetrics(std::vector<Message>{Message{"x", 0, 0, Bye{"x"}}}), ParseError);
  const std::vector<Message> bare = {Message{"x", 0, 0, Hello{}}, Message{"x", 1, 5, SceneState{}}};
  const auto m = computeMetrics(bare);
  EXPECT_EQ(m.duty_cycle, (std::array<double, kNumActuators>{}));
  EXPECT_FALSE(m.success);
  EXPECT_DOUBLE_EQ(m.path_length, 0.0);
}

TEST(Session, StopHookEndsWithBye) {
  SessionConfig cfg;
  SessionHooks hooks;
  hooks.before_tick = [](std::uint64_t tick) -> std::optional<std::string> {
    if (tick == 50) return "interrupted";
    return std::nullopt;
  };
  std::size_t streamed = 0;
  hooks.on_message = [&](const Message&) { ++streamed; };
  const auto r = runSession(cfg, nullptr, hooks);
  EXPECT_EQ(r.end_reason, "interrupted");
  EXPECT_FALSE(r.report.success);
  ASSERT_TRUE(r.log.back().as<Bye>());
  EXPECT_EQ(r.log.back().as<Bye>()->reason, "interrupted");
  EXPECT_EQ(r.log.back().tick, 49u);
  EXPECT_EQ(streamed, r.log.size());
}

TEST(Session, TimeoutEndsSession) {
  auto cfg = autonomyConfig();
  cfg.session.timeout = 1.0;
  const auto r = runSession(cfg);
  EXPECT_EQ(r.end_reason, "timeout");
  EXPECT_EQ(r.log.back().tick, 100u);
}

TEST(Session, ValidationErrors) {
  auto bad = [](auto mutate) {
    SessionConfig cfg;
    mutate(cfg);
    EXPECT_THROW(runSession(cfg), ConfigError);
  };
  bad([](SessionConfig& c) { c.session.dt = 0.02; });
  bad([](SessionConfig& c) { c.session.haptic_rate = 30.0; });
  bad([](SessionConfig& c) { c.session.timeout = 0.0; });
  bad([](SessionConfig& c) { c.feedback.horizon = 0.0; });
  bad([](SessionConfig& c) { c.feedback.min_gain = 0.0; });
  bad([](SessionConfig& c) { c.control.ik.damping = 0.0; });
  bad([](SessionConfig& c) { c.scene.home(0) = 3.0; });
}

TEST(Session, RecordedInputSourceKeepsLatest) {
  InputSample a;
  a.axis1 = 0.5;
  InputSample b;
  b.axis1 = -0.25;
  const std::vector<Message> log = {Message{"x", 0, 3, Input{a}}, Message{"x", 1, 3, Input{b}},
                                    Message{"x", 2, 7, Input{a}}};
  RecordedInputSource src(log);
  EXPECT_FALSE(src.take(2));
  EXPECT_EQ(src.take(3)->axis1, -0.25);
  EXPECT_FALSE(src.take(4));
  EXPECT_EQ(src.take(100)->axis1, 0.5);
  EXPECT_FALSE(src.take(101));
}
