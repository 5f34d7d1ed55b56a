#include "cobot/intent_feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cobot {

DirectionVector::DirectionVector(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("direction must be finite and non-zero");
  v_ = v / n;
}

std::string_view arrowColorName(ArrowColor c) { return c == ArrowColor::Green ? "green" : "red"; }

std::optional<ArrowColor> parseArrowColor(std::string_view name) {
  if (name == "green") return ArrowColor::Green;
  if (name == "red") return ArrowColor::Red;
  return std::nullopt;
}

std::optional<LookaheadDirections> lookaheadDirections(const TrajectoryPlan& plan, double t, double horizon,
                                                       double hold_threshold) {
  if (!(horizon > 0.0)) throw std::invalid_argument("lookahead horizon must be > 0");
  if (!(t >= 0.0 && t <= plan.duration)) throw OutOfRange("lookahead time outside the plan");
  const double t1 = std::min(t + horizon, plan.duration);
  const double t2 = std::min(t + 2.0 * horizon, plan.duration);
  const Eigen::Vector3d p0 = samplePlan(plan, t).position;
  const Eigen::Vector3d p1 = samplePlan(plan, t1).position;
  const Eigen::Vector3d p2 = samplePlan(plan, t2).position;
  const Eigen::Vector3d d0 = p1 - p0;
  const Eigen::Vector3d d1 = p2 - p1;
  if (d0.norm() < hold_threshold || d1.norm() < hold_threshold) return std::nullopt;
  return LookaheadDirections{DirectionVector(d0), DirectionVector(d1)};
}

double angleBetween(const DirectionVector& a, const DirectionVector& b) {
  return std::atan2(a.vector().cross(b.vector()).norm(), a.vector().dot(b.vector()));
}

double changeGain(const DirectionVector& now, const DirectionVector& next, double min_gain) {
  const double theta = angleBetween(now, next);
  // std::lerp is exact at both ends and monotone in between.
  return std::lerp(min_gain, 1.0, theta / std::numbers::pi);
}

DirectionVector alignToGlove(const DirectionVector& d, const GloveAlignment& a) {
  // Matrix form: an identity alignment then reproduces d bit for bit.
  return DirectionVector::fromUnit(a.orientation.toRotationMatrix() * d.vector());
}

ActuatorFrame directionToActuators(const DirectionVector& d_glove, double gain) {
  if (!(gain > 0.0 && gain <= 1.0)) throw std::invalid_argument("gain must lie in (0, 1]");
  ActuatorFrame frame;
  for (int axis = 0; axis < 3; ++axis) {
    const double c = d_glove.vector()(axis);
    frame.intensities[2 * axis] = gain * std::max(0.0, c);
    frame.intensities[2 * axis + 1] = gain * std::max(0.0, -c);
  }
  return frame;
}

std::vector<ArrowGlyph> arrowGlyphs(const Posed& ee, const DirectionVector& now, const DirectionVector& next,
                                    double scale) {
  return {ArrowGlyph{ee.position, now.vector() * scale, ArrowColor::Green},
          ArrowGlyph{ee.position, next.vector() * scale, ArrowColor::Red}};
}

FeedbackSample computeFeedback(const TrajectoryPlan& plan, double t, const Posed& ee,
                               const FeedbackSettings& settings, std::int64_t timestamp_ms) {
  FeedbackSample out;
  out.actuators.timestamp_ms = timestamp_ms;
  out.lookahead = lookaheadDirections(plan, t, settings.horizon, settings.hold_threshold);
  if (!out.lookahead) return out;
  const auto& la = *out.lookahead;
  const double gain = changeGain(la.now, la.next, settings.min_gain);
  out.actuators = directionToActuators(alignToGlove(la.now, settings.alignment), gain);
  out.actuators.timestamp_ms = timestamp_ms;
  out.arrows = arrowGlyphs(ee, la.now, la.next, settings.arrow_scale);
  return out;
}

}  // namespace cobot
