#ifndef COBOT_KINEMATICS_HPP
#define COBOT_KINEMATICS_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/Cholesky>

#include "cobot/errors.hpp"

namespace cobot {

inline constexpr std::size_t kNumJoints = 7;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using JointVector = Eigen::Matrix<Scalar, static_cast<int>(kNumJoints), 1>;
template <typename Scalar>
using Quaternion = Eigen::Quaternion<Scalar>;

/// Seven joint angles in radians.
template <typename Scalar>
using JointConfig = JointVector<Scalar>;

/// 6x7 geometric Jacobian. Rows: linear x,y,z then angular x,y,z.
template <typename Scalar>
using JacobianView = Eigen::Matrix<Scalar, 6, static_cast<int>(kNumJoints)>;

template <typename Scalar>
struct Pose {
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
  Quaternion<Scalar> orientation = Quaternion<Scalar>::Identity();

  Eigen::Transform<Scalar, 3, Eigen::Isometry> isometry() const {
    Eigen::Transform<Scalar, 3, Eigen::Isometry> t = Eigen::Transform<Scalar, 3, Eigen::Isometry>::Identity();
    t.linear() = orientation.toRotationMatrix();
    t.translation() = position;
    return t;
  }

  static Pose fromIsometry(const Eigen::Transform<Scalar, 3, Eigen::Isometry>& t) {
    Pose p;
    p.position = t.translation();
    p.orientation = Quaternion<Scalar>(t.linear()).normalized();
    return p;
  }
};

template <typename Scalar>
struct Twist {
  Vector3<Scalar> linear = Vector3<Scalar>::Zero();
  Vector3<Scalar> angular = Vector3<Scalar>::Zero();

  Vector6<Scalar> stacked() const {
    Vector6<Scalar> v;
    v << linear, angular;
    return v;
  }
  bool isZero() const { return linear.isZero(0) && angular.isZero(0); }
};

template <typename Scalar>
struct JointDescriptor {
  Vector3<Scalar> axis = Vector3<Scalar>::UnitZ();  // unit, parent frame
  Vector3<Scalar> offset = Vector3<Scalar>::Zero(); // to next joint (or EE), after rotation
  Scalar lower = Scalar(-2.6);
  Scalar upper = Scalar(2.6);
};

template <typename Scalar>
struct ArmModel {
  std::array<JointDescriptor<Scalar>, kNumJoints> joints{};
  Pose<Scalar> base{};

  Scalar totalReach() const {
    Scalar sum(0);
    for (const auto& j : joints) sum += j.offset.norm();
    return sum;
  }

  bool withinLimits(const JointConfig<Scalar>& q) const {
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      const Scalar v = q(static_cast<Eigen::Index>(i));
      if (!std::isfinite(v) || v < joints[i].lower || v > joints[i].upper) return false;
    }
    return true;
  }

  JointConfig<Scalar> clampToLimits(const JointConfig<Scalar>& q) const {
    JointConfig<Scalar> out = q;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      auto idx = static_cast<Eigen::Index>(i);
      out(idx) = std::min(std::max(out(idx), joints[i].lower), joints[i].upper);
    }
    return out;
  }

  /// Throws ConfigError when the descriptor set breaks the model invariants.
  void validate() const {
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      const auto& j = joints[i];
      if (!j.axis.allFinite() || std::abs(j.axis.norm() - Scalar(1)) > Scalar(1e-9))
        throw ConfigError("joint " + std::to_string(i + 1) + ": axis must be a unit vector");
      if (!j.offset.allFinite() || !(j.offset.norm() > Scalar(0)))
        throw ConfigError("joint " + std::to_string(i + 1) + ": link offset length must be > 0");
      if (!(j.lower < j.upper))
        throw ConfigError("joint " + std::to_string(i + 1) + ": empty limit interval");
    }
    if (std::abs(base.orientation.norm() - Scalar(1)) > Scalar(1e-9) || !base.position.allFinite())
      throw ConfigError("arm base pose is not a valid rigid transform");
  }
};

/// Alternating Z,Y,Z,Y,Z,Y,Z revolute chain, fully extended along +Z at q = 0.
template <typename Scalar>
ArmModel<Scalar> defaultArmModel() {
  static constexpr double kOffsets[kNumJoints] = {0.175, 0.175, 0.160, 0.160, 0.120, 0.120, 0.075};
  ArmModel<Scalar> model;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    auto& j = model.joints[i];
    j.axis = (i % 2 == 0) ? Vector3<Scalar>::UnitZ() : Vector3<Scalar>::UnitY();
    j.offset = Vector3<Scalar>(Scalar(0), Scalar(0), Scalar(kOffsets[i]));
    j.lower = Scalar(-2.6);
    j.upper = Scalar(2.6);
  }
  return model;
}

template <typename Scalar>
struct IkSettings {
  Scalar damping = Scalar(0.05);
  Scalar max_linear_speed = Scalar(0.15);   // m/s
  Scalar max_angular_speed = Scalar(0.8);   // rad/s
};

template <typename Scalar>
Twist<Scalar> clampTwist(const Twist<Scalar>& t, const IkSettings<Scalar>& s) {
  Twist<Scalar> out = t;
  const Scalar lin = out.linear.norm();
  if (lin > s.max_linear_speed) out.linear *= s.max_linear_speed / lin;
  const Scalar ang = out.angular.norm();
  if (ang > s.max_angular_speed) out.angular *= s.max_angular_speed / ang;
  return out;
}

namespace detail {

template <typename Scalar>
void requireWithinLimits(const ArmModel<Scalar>& model, const JointConfig<Scalar>& q) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const Scalar v = q(static_cast<Eigen::Index>(i));
    if (!std::isfinite(v) || v < model.joints[i].lower || v > model.joints[i].upper)
      throw LimitViolation("joint " + std::to_string(i + 1) + " angle outside limits");
  }
}

// Walks the chain once, recording the world-frame axis and origin of every joint.
template <typename Scalar>
Eigen::Transform<Scalar, 3, Eigen::Isometry> walkChain(const ArmModel<Scalar>& model,
                                                       const JointConfig<Scalar>& q,
                                                       std::array<Vector3<Scalar>, kNumJoints>* axes,
                                                       std::array<Vector3<Scalar>, kNumJoints>* origins) {
  using Iso = Eigen::Transform<Scalar, 3, Eigen::Isometry>;
  Iso t = model.base.isometry();
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const auto& j = model.joints[i];
    if (axes) (*axes)[i] = t.linear() * j.axis;
    if (origins) (*origins)[i] = t.translation();
    t.rotate(Eigen::AngleAxis<Scalar>(q(static_cast<Eigen::Index>(i)), j.axis));
    t.translate(j.offset);
  }
  return t;
}

}  // namespace detail

template <typename Scalar>
Pose<Scalar> forwardKinematics(const ArmModel<Scalar>& model, const JointConfig<Scalar>& q) {
  detail::requireWithinLimits(model, q);
  return Pose<Scalar>::fromIsometry(detail::walkChain<Scalar>(model, q, nullptr, nullptr));
}

/// Column j is (axis_j x (p_ee - p_j), axis_j) with axes and origins in the world frame.
template <typename Scalar>
JacobianView<Scalar> jacobian(const ArmModel<Scalar>& model, const JointConfig<Scalar>& q) {
  detail::requireWithinLimits(model, q);
  std::array<Vector3<Scalar>, kNumJoints> axes;
  std::array<Vector3<Scalar>, kNumJoints> origins;
  const auto ee = detail::walkChain<Scalar>(model, q, &axes, &origins);
  const Vector3<Scalar> p_ee = ee.translation();

  JacobianView<Scalar> jac;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    jac.template block<3, 1>(0, col) = axes[i].cross(p_ee - origins[i]);
    jac.template block<3, 1>(3, col) = axes[i];
  }
  return jac;
}

/// Yoshikawa measure sqrt(det(J J^T)).
template <typename Scalar>
Scalar manipulability(const JacobianView<Scalar>& jac) {
  const Scalar det = (jac * jac.transpose()).determinant();
  return det > Scalar(0) ? std::sqrt(det) : Scalar(0);
}

/// Rotation taking `from` onto `to`, as an axis-angle vector in the world frame.
template <typename Scalar>
Vector3<Scalar> orientationError(const Quaternion<Scalar>& from, const Quaternion<Scalar>& to) {
  Quaternion<Scalar> delta = to * from.conjugate();
  if (delta.w() < Scalar(0)) delta.coeffs() = -delta.coeffs();
  const Eigen::AngleAxis<Scalar> aa(delta.normalized());
  return aa.axis() * aa.angle();
}

template <typename Scalar>
struct IkStepResult {
  JointConfig<Scalar> q;
  Vector6<Scalar> joint_rates_residual;  // J*qdot - twist, for diagnostics
  bool saturated = false;                 // a joint hit its limit and was clamped
};

/// Damped least-squares rate step: qdot = J^T (J J^T + damping^2 I)^-1 twist.
/// The twist is clamped to the configured speed limits before solving.
template <typename Scalar>
IkStepResult<Scalar> ikVelocityStep(const ArmModel<Scalar>& model, const JointConfig<Scalar>& q,
                                    const Twist<Scalar>& desired, Scalar dt,
                                    const IkSettings<Scalar>& settings = {}) {
  if (!(dt > Scalar(0) && dt <= Scalar(0.1)))
    throw std::invalid_argument("ikVelocityStep: dt must lie in (0, 0.1]");
  IkStepResult<Scalar> result{q, Vector6<Scalar>::Zero(), false};
  const Twist<Scalar> twist = clampTwist(desired, settings);
  if (twist.isZero()) {
    detail::requireWithinLimits(model, q);
    return result;
  }
  const JacobianView<Scalar> jac = jacobian(model, q);
  const Vector6<Scalar> v = twist.stacked();
  Eigen::Matrix<Scalar, 6, 6> normal = jac * jac.transpose();
  normal.diagonal().array() += settings.damping * settings.damping;
  const JointVector<Scalar> qdot = jac.transpose() * normal.ldlt().solve(v);
  result.joint_rates_residual = jac * qdot - v;

  const JointConfig<Scalar> unclamped = q + dt * qdot;
  result.q = model.clampToLimits(unclamped);
  result.saturated = (result.q.array() != unclamped.array()).any();
  return result;
}

enum class IkStatus { Converged, NotConverged };

template <typename Scalar>
struct IkResult {
  JointConfig<Scalar> q;
  Scalar position_error = Scalar(0);
  Scalar orientation_error = Scalar(0);
  int iterations = 0;
  IkStatus status = IkStatus::NotConverged;

  bool converged() const { return status == IkStatus::Converged; }
};

template <typename Scalar>
struct IkSolveOptions {
  Scalar position_tolerance = Scalar(1e-4);
  Scalar orientation_tolerance = Scalar(1e-3);
  int max_iterations = 500;
  Scalar step_dt = Scalar(0.1);
};

/// Iterates damped least-squares steps toward `target`. Throws Unreachable when the
/// target lies outside the reach sphere; a non-converged solve returns the best
/// configuration seen with status NotConverged.
template <typename Scalar>
IkResult<Scalar> solveIk(const ArmModel<Scalar>& model, const Pose<Scalar>& target,
                         const JointConfig<Scalar>& seed, const IkSettings<Scalar>& settings = {},
                         const IkSolveOptions<Scalar>& options = {}) {
  if ((target.position - model.base.position).norm() > model.totalReach())
    throw Unreachable("IK target outside the reach sphere");
  detail::requireWithinLimits(model, seed);

  auto errorsAt = [&](const JointConfig<Scalar>& q, Vector3<Scalar>& dp, Vector3<Scalar>& dr) {
    const Pose<Scalar> p = forwardKinematics(model, q);
    dp = target.position - p.position;
    dr = orientationError(p.orientation, target.orientation);
  };

  IkResult<Scalar> best;
  best.q = seed;
  JointConfig<Scalar> q = seed;
  Vector3<Scalar> dp, dr;
  errorsAt(q, dp, dr);
  best.position_error = dp.norm();
  best.orientation_error = dr.norm();
  auto score = [&](Scalar pe, Scalar oe) {
    return pe / options.position_tolerance + oe / options.orientation_tolerance;
  };
  Scalar best_score = score(best.position_error, best.orientation_error);

  for (int it = 0; it <= options.max_iterations; ++it) {
    const Scalar pe = dp.norm();
    const Scalar oe = dr.norm();
    if (pe < options.position_tolerance && oe < options.orientation_tolerance) {
      return IkResult<Scalar>{q, pe, oe, it, IkStatus::Converged};
    }
    if (it == options.max_iterations) break;
    Twist<Scalar> twist;
    twist.linear = dp / options.step_dt;
    twist.angular = dr / options.step_dt;
    q = ikVelocityStep(model, q, twist, options.step_dt, settings).q;
    errorsAt(q, dp, dr);
    const Scalar s = score(dp.norm(), dr.norm());
    if (s < best_score) {
      best_score = s;
      best = IkResult<Scalar>{q, dp.norm(), dr.norm(), it + 1, IkStatus::NotConverged};
    }
  }
  best.iterations = options.max_iterations;
  return best;
}

using ArmModeld = ArmModel<double>;
using JointConfigd = JointConfig<double>;
using Posed = Pose<double>;
using Twistd = Twist<double>;
using JacobianViewd = JacobianView<double>;
using IkSettingsd = IkSettings<double>;

}  // namespace cobot

#endif  // COBOT_KINEMATICS_HPP
