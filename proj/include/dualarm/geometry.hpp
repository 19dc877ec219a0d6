#pragma once

#include "dualarm/arm.hpp"

#include <vector>

namespace dualarm::sim {

/// Planar rigid transform: x_world = p + R(th) x_local.
struct Pose2 {
  Vec2 p{0.0, 0.0};
  double th = 0.0;

  Vec2 apply(const Vec2& x) const {
    const double c = std::cos(th), s = std::sin(th);
    return {p.x() + c * x.x() - s * x.y(), p.y() + s * x.x() + c * x.y()};
  }
  Vec2 rotate(const Vec2& x) const {
    const double c = std::cos(th), s = std::sin(th);
    return {c * x.x() - s * x.y(), s * x.x() + c * x.y()};
  }
  Pose2 compose(const Pose2& o) const { return {apply(o.p), th + o.th}; }
  Pose2 inverse() const {
    const double c = std::cos(th), s = std::sin(th);
    const Vec2 q{-(c * p.x() + s * p.y()), -(-s * p.x() + c * p.y())};
    return {q, -th};
  }
};

/// Rigid-body velocity: linear velocity of a reference point plus spin.
struct Twist2 {
  Vec2 v{0.0, 0.0};
  double w = 0.0;
};

/// Velocity of a world-frame point on a body whose reference point ref moves
/// with twist t: v_point = v_ref + w x (point - ref).
inline Vec2 point_velocity(const Twist2& t, const Vec2& ref, const Vec2& point) {
  return t.v + t.w * perp(point - ref);
}

/// Peg-and-hole pair. The peg frame sits at the peg base, +x toward the tip;
/// the peg is a peg_length x peg_width rectangle in x in [0, peg_length].
/// The hole frame sits at the channel mouth, +x pointing into the channel;
/// the channel is hole_depth deep and peg_width + clearance wide, bounded by
/// two walls and a bottom of wall_thickness each.
struct PegHoleGeometry {
  double peg_width = 0.02;
  double peg_length = 0.06;
  double clearance = 0.002;
  double hole_depth = 0.04;
  double wall_thickness = 0.01;
  Pose2 peg_mount;   // peg frame in its carrier's end-effector frame
  Pose2 hole_mount{{0.0, 0.0}, M_PI};  // hole frame in its carrier's end-effector frame

  double hole_width() const { return peg_width + clearance; }
  void validate() const;
};

/// Axis-aligned box in some body frame.
struct Box {
  Vec2 center;
  Vec2 half;
};

/// Solid boxes of each body in its own frame.
std::vector<Box> peg_boxes(const PegHoleGeometry& g);
std::vector<Box> hole_boxes(const PegHoleGeometry& g);

struct ContactParams {
  // Penalty contact is resolved once per simulation substep, so its
  // stiffness/damping share the sampled-feedback stability budget of the
  // lightest joint that the contact lever reaches (see GainSpec::defaults).
  double stiffness = 800.0;  // normal penalty stiffness [N/m]
  double damping = 5.0;      // normal penalty damping [N s/m]
  double friction = 0.5;    // Coulomb coefficient
  double friction_vel = 0.01;  // tangential velocity regularization [m/s]
  double max_penetration = 0.01;  // divergence guard [m]

  void validate() const;
};

struct ContactResult {
  dyn::Wrench2D on_peg;   // about the peg frame origin
  dyn::Wrench2D on_hole;  // about the hole frame origin
  int contact_count = 0;
  double max_depth = 0.0;
  double normal_sum = 0.0;  // sum of normal force magnitudes
};

/// Penalty contact between the peg and the hole part: every corner of one
/// body is tested against the boxes of the other; an interior corner yields a
/// spring-damper normal force along its shallowest exit direction plus
/// regularized Coulomb friction. Wrenches on the two bodies are equal and
/// opposite by construction. Throws DivergedError past max_penetration.
ContactResult contact_resolve(const PegHoleGeometry& g, const ContactParams& cp,
                              const Pose2& peg, const Twist2& peg_twist, const Pose2& hole,
                              const Twist2& hole_twist);

}  // namespace dualarm::sim
