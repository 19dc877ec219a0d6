#pragma once

#include "dualarm/dynamics.hpp"

namespace dualarm::ctrl {

enum class ControllerKind { JointPosition, CartesianImpedance, VariableImpedance };

const char* to_string(ControllerKind k);
ControllerKind controller_from_string(const std::string& s);

/// Per-arm action width: joint deltas (n), task-space displacement (3), or
/// displacement plus stiffness command (6).
int arm_action_dim(ControllerKind k, int dof);
/// Centralized policy output width: both arms concatenated.
int action_dim(ControllerKind k, int dof);

struct GainSpec {
  Vec kp_joint, kv_joint;        // joint-position PD gains
  Vec3 kp_task, kv_task;         // fixed Cartesian impedance gains
  Vec3 kp_task_min, kp_task_max; // stiffness command range (variable impedance)
  double kp_null = 5.0, kv_null = 0.5;
  Vec3 dx_bound;                 // |delta_x| bound per task axis
  double dq_bound = 0.1;         // |delta_q| bound per joint [rad]

  /// Gains sized for the bench arm under sampled-and-held torques: joint PD
  /// (60, 60, 8...) / (12, 12, 1.2...), kp_task (64, 64, 0.5) critically
  /// damped, stiffness range [5, 150] translational / [0.05, 0.5] rotational,
  /// dx bound (0.05, 0.05, 0.2). Damping beyond ~2 M_ii / dt on any joint a
  /// gain can reach makes the discrete loop diverge, so distal gains stay low.
  static GainSpec defaults(int dof);
  void validate(int dof) const;
};

/// tau = kp .* (q_des - q) - kv .* qdot, without torque clamping (the
/// integrator owns the limits).
Vec joint_position_torque(const GainSpec& g, const Vec& q_des, const Vec& q, const Vec& qdot);

/// Damped-pseudo-inverse nullspace torque: projects a joint PD toward q_rest
/// through I - J^T (Lambda J M^{-1}), which leaves end-effector forces
/// untouched. Vanishes when J is square and q = q_rest.
Vec nullspace_torque(const dyn::ArmModel& m, const Vec& q, const Vec& qdot, const Vec& q_rest,
                     const GainSpec& g, double damping = dyn::kTaskInertiaDamping);

/// Cartesian impedance with explicit gains:
/// tau = J^T (kp .* dx - kv .* xdot) + tau_gravity + tau_nullspace.
/// Rendered stiffness equals kp: a constant end-effector force f displaces
/// the steady state by f / kp per axis.
Vec cartesian_impedance_torque(const dyn::ArmModel& m, const Vec& q, const Vec& qdot,
                               const Vec3& delta_x, const Vec3& kp_task, const Vec3& kv_task,
                               const Vec& q_rest, const GainSpec& g);

/// Fixed-gain variant using g.kp_task / g.kv_task.
Vec cartesian_impedance_torque(const dyn::ArmModel& m, const Vec& q, const Vec& qdot,
                               const Vec3& delta_x, const GainSpec& g, const Vec& q_rest);

/// Map raw stiffness commands in (-1, 1) onto [kp_min, kp_max] by log-linear
/// interpolation; kv = 2 sqrt(kp) keeps the virtual spring critically damped.
struct ImpedanceGains {
  Vec3 kp, kv;
};
ImpedanceGains variable_impedance_map(const Vec3& raw, const GainSpec& g);

/// Interpreted policy action for one arm, fixed over a control tick.
struct ArmCommand {
  Vec q_des;          // joint-position target (JointPosition)
  Vec3 x_des;         // task-space pose anchor (impedance kinds)
  Vec3 kp_task, kv_task;
};

struct DualCommand {
  ControllerKind kind;
  ArmCommand left, right;
};

/// Decode a raw policy action in [-1, 1]^d into per-arm commands. Joint
/// targets move at most dq_bound per joint from the current q; task anchors
/// are the current end-effector pose displaced by the bounded delta_x. Raw
/// values are clamped to [-1, 1] first.
DualCommand interpret_action(ControllerKind kind, const Vec& action, const dyn::ArmModel& left_m,
                             const dyn::ArmState& left_s, const dyn::ArmModel& right_m,
                             const dyn::ArmState& right_s, const GainSpec& g);

/// Torque for one arm realizing its command at the current state.
Vec command_torque(ControllerKind kind, const ArmCommand& cmd, const dyn::ArmModel& m,
                   const dyn::ArmState& s, const GainSpec& g, const Vec& q_rest);

/// interpret_action + command_torque for both arms in one call.
std::pair<Vec, Vec> action_to_torques(ControllerKind kind, const Vec& action,
                                      const dyn::ArmModel& left_m, const dyn::ArmState& left_s,
                                      const dyn::ArmModel& right_m, const dyn::ArmState& right_s,
                                      const GainSpec& g, const Vec& q_rest_left,
                                      const Vec& q_rest_right);

}  // namespace dualarm::ctrl
