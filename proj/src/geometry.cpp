#include "dualarm/geometry.hpp"

#include <cmath>

namespace dualarm::sim {

void PegHoleGeometry::validate() const {
  require(peg_width > 0 && peg_length > 0, "geometry: peg dimensions must be positive");
  require(clearance > 0, "geometry: clearance must be positive");
  require(hole_depth > 0 && wall_thickness > 0, "geometry: hole dimensions must be positive");
  require(peg_length > hole_depth * 0.5, "geometry: peg too short to reach into the hole");
}

std::vector<Box> peg_boxes(const PegHoleGeometry& g) {
  return {{{0.5 * g.peg_length, 0.0}, {0.5 * g.peg_length, 0.5 * g.peg_width}}};
}

std::vector<Box> hole_boxes(const PegHoleGeometry& g) {
  const double w = 0.5 * g.hole_width();
  const double t = g.wall_thickness;
  return {
      {{0.5 * g.hole_depth, w + 0.5 * t}, {0.5 * g.hole_depth, 0.5 * t}},   // upper wall
      {{0.5 * g.hole_depth, -(w + 0.5 * t)}, {0.5 * g.hole_depth, 0.5 * t}},  // lower wall
      {{g.hole_depth + 0.5 * t, 0.0}, {0.5 * t, w + t}},                    // bottom
  };
}

void ContactParams::validate() const {
  require(stiffness > 0 && damping >= 0, "contact: stiffness/damping out of range");
  require(friction >= 0 && friction_vel > 0, "contact: friction parameters out of range");
  require(max_penetration > 0, "contact: max_penetration must be positive");
}

namespace {

struct BodyRef {
  const Pose2& pose;
  const Twist2& twist;
};

// Corner of body A tested against one box of body B; accumulates the wrench
// on A (about A's origin) and the opposite wrench on B (about B's origin).
void corner_vs_box(const Vec2& corner_world, const BodyRef& a, const BodyRef& b, const Box& box,
                   const ContactParams& cp, dyn::Wrench2D& on_a, dyn::Wrench2D& on_b,
                   ContactResult& stats) {
  const Vec2 local = b.pose.inverse().apply(corner_world) - box.center;
  const double dx = box.half.x() - std::abs(local.x());
  const double dy = box.half.y() - std::abs(local.y());
  if (dx <= 0.0 || dy <= 0.0) return;

  const double depth = std::min(dx, dy);
  Vec2 n_local;
  if (dx < dy)
    n_local = {local.x() >= 0 ? 1.0 : -1.0, 0.0};
  else
    n_local = {0.0, local.y() >= 0 ? 1.0 : -1.0};
  const Vec2 n = b.pose.rotate(n_local);

  const Vec2 v_rel = point_velocity(a.twist, a.pose.p, corner_world) -
                     point_velocity(b.twist, b.pose.p, corner_world);
  const double depth_rate = -v_rel.dot(n);
  const double fn = std::max(0.0, cp.stiffness * depth + cp.damping * depth_rate);

  const Vec2 t = perp(n);
  const double vt = v_rel.dot(t);
  const double ft = -cp.friction * fn * std::clamp(vt / cp.friction_vel, -1.0, 1.0);

  const Vec2 f = fn * n + ft * t;
  on_a.force += f;
  on_a.torque += cross2(corner_world - a.pose.p, f);
  on_b.force -= f;
  on_b.torque -= cross2(corner_world - b.pose.p, f);

  stats.contact_count += 1;
  stats.max_depth = std::max(stats.max_depth, depth);
  stats.normal_sum += fn;
}

std::vector<Vec2> box_corners(const Pose2& body, const Box& box) {
  std::vector<Vec2> c;
  c.reserve(4);
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      c.push_back(body.apply(box.center + Vec2(sx * box.half.x(), sy * box.half.y())));
  return c;
}

}  // namespace

ContactResult contact_resolve(const PegHoleGeometry& g, const ContactParams& cp,
                              const Pose2& peg, const Twist2& peg_twist, const Pose2& hole,
                              const Twist2& hole_twist) {
  const std::vector<Box> pegs = peg_boxes(g);
  const std::vector<Box> holes = hole_boxes(g);
  const BodyRef peg_ref{peg, peg_twist};
  const BodyRef hole_ref{hole, hole_twist};

  ContactResult r;
  for (const Box& pb : pegs)
    for (const Vec2& c : box_corners(peg, pb))
      for (const Box& hb : holes)
        corner_vs_box(c, peg_ref, hole_ref, hb, cp, r.on_peg, r.on_hole, r);
  for (const Box& hb : holes)
    for (const Vec2& c : box_corners(hole, hb))
      for (const Box& pb : pegs)
        corner_vs_box(c, hole_ref, peg_ref, pb, cp, r.on_hole, r.on_peg, r);

  if (r.max_depth > cp.max_penetration)
    throw DivergedError("contact_resolve: penetration exceeded the validity envelope");
  return r;
}

}  // namespace dualarm::sim
