#ifndef COBOT_INTENT_FEEDBACK_HPP
#define COBOT_INTENT_FEEDBACK_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cobot/kinematics.hpp"
#include "cobot/scene_task.hpp"

namespace cobot {

/// Unit 3-vector.
class DirectionVector {
 public:
  /// Normalizes `v`; throws std::invalid_argument for zero or non-finite input.
  explicit DirectionVector(const Eigen::Vector3d& v);
  static DirectionVector fromUnit(const Eigen::Vector3d& unit) { return DirectionVector(unit, 0); }

  const Eigen::Vector3d& vector() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  DirectionVector operator-() const { return DirectionVector(-v_, 0); }

 private:
  DirectionVector(const Eigen::Vector3d& unit, int) : v_(unit) {}
  Eigen::Vector3d v_;
};

/// Actuator slots, in wire order.
enum class Actuator : std::uint8_t { PosX, NegX, PosY, NegY, PosZ, NegZ };
inline constexpr std::size_t kNumActuators = 6;

struct ActuatorFrame {
  std::array<double, kNumActuators> intensities{};
  std::int64_t timestamp_ms = 0;

  double operator[](Actuator a) const { return intensities[static_cast<std::size_t>(a)]; }
  bool operator==(const ActuatorFrame&) const = default;
};

enum class ArrowColor { Green, Red };
std::string_view arrowColorName(ArrowColor c);
std::optional<ArrowColor> parseArrowColor(std::string_view name);

struct ArrowGlyph {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d vector = Eigen::Vector3d::Zero();
  ArrowColor color = ArrowColor::Green;

  bool operator==(const ArrowGlyph& o) const {
    return origin == o.origin && vector == o.vector && color == o.color;
  }
};

/// World-to-glove rotation.
struct GloveAlignment {
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct FeedbackSettings {
  double min_gain = 0.2;
  double horizon = 0.5;          // s
  double arrow_scale = 0.25;     // m
  double hold_threshold = 1e-4;  // m
  GloveAlignment alignment;
};

struct LookaheadDirections {
  DirectionVector now;
  DirectionVector next;
};

/// Planned direction over [t, t+h] and [t+h, t+2h]. Empty ("hold") when either
/// displacement is shorter than the hold threshold.
std::optional<LookaheadDirections> lookaheadDirections(const TrajectoryPlan& plan, double t, double horizon,
                                                       double hold_threshold = 1e-4);

/// Angle between two unit directions in [0, pi].
double angleBetween(const DirectionVector& a, const DirectionVector& b);

/// Gain rising linearly from `min_gain` (no turn) to 1 (reversal) with the turn angle.
double changeGain(const DirectionVector& now, const DirectionVector& next, double min_gain = 0.2);

DirectionVector alignToGlove(const DirectionVector& d, const GloveAlignment& a);

/// Half-wave rectified projection of the direction onto the six signed glove axes.
ActuatorFrame directionToActuators(const DirectionVector& d_glove, double gain);

std::vector<ArrowGlyph> arrowGlyphs(const Posed& ee, const DirectionVector& now, const DirectionVector& next,
                                    double scale = 0.25);

/// Everything one feedback tick produces.
struct FeedbackSample {
  std::optional<LookaheadDirections> lookahead;
  ActuatorFrame actuators;        // all zero on hold
  std::vector<ArrowGlyph> arrows; // empty on hold
};

FeedbackSample computeFeedback(const TrajectoryPlan& plan, double t, const Posed& ee,
                               const FeedbackSettings& settings, std::int64_t timestamp_ms);

}  // namespace cobot

#endif  // COBOT_INTENT_FEEDBACK_HPP
