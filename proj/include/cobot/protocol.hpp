#ifndef COBOT_PROTOCOL_HPP
#define COBOT_PROTOCOL_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cobot/control.hpp"
#include "cobot/errors.hpp"
#include "cobot/intent_feedback.hpp"
#include "cobot/kinematics.hpp"
#include "cobot/scene_task.hpp"

namespace cobot::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7471;
inline constexpr std::string_view kLogExtension = ".cobotlog";

using Vec3 = std::array<double, 3>;

struct WirePose {
  Vec3 position{};
  std::array<double, 4> orientation{1.0, 0.0, 0.0, 0.0};  // w, x, y, z

  static WirePose from(const Posed& p);
  Posed toPose() const;
  bool operator==(const WirePose&) const = default;
};

struct WireJoint {
  Vec3 axis{};
  Vec3 offset{};
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const WireJoint&) const = default;
};

struct WireArrow {
  Vec3 origin{};
  Vec3 vector{};
  ArrowColor color = ArrowColor::Green;

  static WireArrow from(const ArrowGlyph& g);
  bool operator==(const WireArrow&) const = default;
};

struct Hello {
  int version = kVersion;
  std::string scenario;
  std::string scheme;           // "cardinal", "adaptive" or "autonomy"; empty from clients
  double dt = 0.0;              // 0 from clients
  std::vector<WireJoint> arm;   // arm model mirror for clients; empty from clients
  bool operator==(const Hello&) const = default;
};

struct SceneState {
  std::array<double, kNumJoints> joints{};
  WirePose ee;
  WirePose block;
  Phase phase = Phase::ApproachPick;
  bool grasped = false;
  bool gripper_closed = false;
  bool operator==(const SceneState&) const = default;
};

struct Actuators {
  std::array<double, kNumActuators> intensities{};
  std::int64_t timestamp_ms = 0;
  std::string source;  // "plan" (autonomy) or "recommender" (user-driven)
  bool operator==(const Actuators&) const = default;
};

struct Arrows {
  std::vector<WireArrow> glyphs;
  bool operator==(const Arrows&) const = default;
};

struct Input {
  InputSample sample;
  bool operator==(const Input&) const = default;
};

struct ModeSwitch {
  std::uint32_t index = 0;
  std::string label;
  bool operator==(const ModeSwitch&) const = default;
};

struct TaskEventMsg {
  std::string name;
  bool operator==(const TaskEventMsg&) const = default;
};

struct Metrics {
  int switch_count = 0;
  double elapsed = 0.0;
  bool operator==(const Metrics&) const = default;
};

struct Bye {
  std::string reason;
  bool operator==(const Bye&) const = default;
};

using Payload = std::variant<Hello, SceneState, Actuators, Arrows, Input, ModeSwitch, TaskEventMsg, Metrics, Bye>;

struct Message {
  std::string session;
  std::uint64_t seq = 0;   // strictly increasing per session
  std::uint64_t tick = 0;  // simulation tick, non-decreasing
  Payload payload;

  bool operator==(const Message&) const = default;

  template <typename T>
  const T* as() const { return std::get_if<T>(&payload); }
};

/// Wire tag of a payload ("hello", "scene", "actuators", ...).
std::string_view tagOf(const Payload& p);

/// One canonical line, no trailing newline. Keys sorted; floating-point values in
/// shortest round-trip form. Throws std::invalid_argument on non-finite values.
std::string encode(const Message& m);

/// Inverse of encode. Throws ParseError, VersionError (Hello with another
/// protocol version) or UnknownTag.
Message decode(std::string_view line);

/// Writes one encoded message per line.
void record(const std::vector<Message>& log, const std::string& path);

/// Reads a whole log; ParseError carries the 1-based line number.
std::vector<Message> readLog(const std::string& path);

/// Streams a log to `deliver`, pacing message delivery by tick * dt * multiplier of
/// wall time (multiplier 0: no pacing). Messages before a corrupt line are
/// delivered before ParseError is thrown.
void replay(const std::string& path, double multiplier, const std::function<void(const Message&)>& deliver);

}  // namespace cobot::protocol

#endif  // COBOT_PROTOCOL_HPP
