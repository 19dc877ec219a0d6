#pragma once

#include "dualarm/arm.hpp"

#include <vector>

namespace dualarm::dyn {

/// Per-link frames in world coordinates: absolute link headings, joint
/// positions (joints[0] = base, joints[n] = end-effector) and link COMs.
struct LinkFrames {
  Vec theta;
  std::vector<Vec2> joints;
  std::vector<Vec2> coms;
};

LinkFrames link_frames(const ArmModel& m, const Vec& q);

EePose forward_kinematics(const ArmModel& m, const Vec& q);

/// Geometric Jacobian at the end-effector, 3 x n rows (vx, vy, omega).
Mat jacobian(const ArmModel& m, const Vec& q);

/// End-effector twist J(q) qdot.
Vec3 ee_twist(const ArmModel& m, const Vec& q, const Vec& qdot);

/// Joint-space mass matrix from COM Jacobians:
/// M = sum_i (m_i Jv_i^T Jv_i + I_i Jw_i^T Jw_i). Symmetric positive definite.
Mat mass_matrix(const ArmModel& m, const Vec& q);

/// Recursive Newton-Euler inverse dynamics: joint torques realizing qddot at
/// (q, qdot) including gravity, excluding viscous friction.
Vec inverse_dynamics(const ArmModel& m, const Vec& q, const Vec& qdot, const Vec& qddot);

/// Coriolis/centrifugal + gravity + viscous friction: inverse_dynamics with
/// qddot = 0 plus friction .* qdot.
Vec bias_forces(const ArmModel& m, const Vec& q, const Vec& qdot);

/// Torque that statically compensates gravity at q.
Vec gravity_torque(const ArmModel& m, const Vec& q);

/// qddot = M(q)^{-1} (tau - tau_ext - bias(q, qdot)); tau_ext is the
/// joint-space image of the wrench the arm exerts on its surroundings.
Vec forward_dynamics(const ArmModel& m, const Vec& q, const Vec& qdot, const Vec& tau,
                     const Vec& tau_ext);

/// One semi-implicit Euler step at dt: clamp tau to the model's limits,
/// integrate velocity then position, then enforce joint limits by clamping q
/// and zeroing the offending joint's velocity. Throws DivergedError if the
/// state leaves the representable envelope.
ArmState integrate_step(const ArmModel& m, const ArmState& s, const Vec& tau, const Vec& tau_ext,
                        double dt);

inline constexpr double kTaskInertiaDamping = 1e-3;

/// Task-space inertia Lambda = (J M^{-1} J^T + damping^2 I)^{-1}. The damping
/// keeps the inverse well-posed near singular configurations.
Mat task_inertia(const ArmModel& m, const Vec& q, double damping = kTaskInertiaDamping);

/// 0.5 qdot^T M(q) qdot.
double kinetic_energy(const ArmModel& m, const Vec& q, const Vec& qdot);

/// sum_i m_i * (-g . com_i); zero reference at the world origin.
double potential_energy(const ArmModel& m, const Vec& q);

}  // namespace dualarm::dyn
