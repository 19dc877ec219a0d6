#include "dualarm/control.hpp"

#include <cmath>

namespace dualarm::ctrl {
namespace {

inline Vec clamp_unit(const Vec& raw) { return raw.cwiseMax(-1.0).cwiseMin(1.0); }

Vec3 ee_pose_vec(const dyn::ArmModel& m, const Vec& q) {
  const dyn::EePose p = dyn::forward_kinematics(m, q);
  return {p.pos.x(), p.pos.y(), p.theta};
}

}  // namespace

const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::JointPosition: return "joint_position";
    case ControllerKind::CartesianImpedance: return "cartesian_impedance";
    case ControllerKind::VariableImpedance: return "variable_impedance";
  }
  return "?";
}

ControllerKind controller_from_string(const std::string& s) {
  if (s == "joint_position") return ControllerKind::JointPosition;
  if (s == "cartesian_impedance") return ControllerKind::CartesianImpedance;
  if (s == "variable_impedance") return ControllerKind::VariableImpedance;
  throw ConfigError("unknown action space '" + s + "'");
}

int arm_action_dim(ControllerKind k, int dof) {
  switch (k) {
    case ControllerKind::JointPosition: return dof;
    case ControllerKind::CartesianImpedance: return 3;
    case ControllerKind::VariableImpedance: return 6;
  }
  return 0;
}

int action_dim(ControllerKind k, int dof) { return 2 * arm_action_dim(k, dof); }

GainSpec GainSpec::defaults(int dof) {
  // Torques are sampled-and-held at the simulation rate, so each joint's total
  // effective damping must stay below 2*M_ii/dt or the discrete loop diverges.
  // The distal links of the bench arm are light (M_ii down to ~7e-3 kg m^2 at
  // 240 Hz => budget ~3 N m s/rad shared by joint, task, and contact damping),
  // hence the taper on everything the wrist can feel.
  GainSpec g;
  g.kp_joint = Vec::Constant(dof, 8.0);
  g.kv_joint = Vec::Constant(dof, 1.2);
  for (int i = 0; i < std::min(dof, 2); ++i) {
    g.kp_joint[i] = 60.0;
    g.kv_joint[i] = 12.0;
  }
  // kv_task is tuned against the arm's reflected task-space inertia rather
  // than the unit-mass 2*sqrt(kp) rule: the wrist sees ~7e-3 kg m^2 about
  // theta, and critical damping for a unit mass leaves that axis glacially
  // overdamped.
  g.kp_task = Vec3(64.0, 64.0, 0.5);
  g.kv_task = Vec3(16.0, 16.0, 0.25);
  g.kp_task_min = Vec3(5.0, 5.0, 0.05);
  g.kp_task_max = Vec3(150.0, 150.0, 0.5);
  g.dx_bound = Vec3(0.05, 0.05, 0.2);
  return g;
}

void GainSpec::validate(int dof) const {
  require(kp_joint.size() == dof && kv_joint.size() == dof, "gains: joint gain size mismatch");
  require((kp_joint.array() > 0).all() && (kv_joint.array() >= 0).all(),
          "gains: joint gains out of range");
  require((kp_task.array() > 0).all() && (kv_task.array() >= 0).all(),
          "gains: task gains out of range");
  require((kp_task_min.array() > 0).all() &&
              (kp_task_max.array() > kp_task_min.array()).all(),
          "gains: stiffness range must satisfy 0 < min < max");
  require((dx_bound.array() > 0).all(), "gains: dx bound must be positive");
  require(dq_bound > 0, "gains: dq bound must be positive");
  require(kp_null >= 0 && kv_null >= 0, "gains: nullspace gains out of range");
}

Vec joint_position_torque(const GainSpec& g, const Vec& q_des, const Vec& q, const Vec& qdot) {
  require(q_des.size() == q.size() && qdot.size() == q.size(),
          "joint_position_torque: size mismatch");
  return g.kp_joint.cwiseProduct(q_des - q) - g.kv_joint.cwiseProduct(qdot);
}

Vec nullspace_torque(const dyn::ArmModel& m, const Vec& q, const Vec& qdot, const Vec& q_rest,
                     const GainSpec& g, double damping) {
  require(q_rest.size() == q.size(), "nullspace_torque: q_rest size mismatch");
  const int n = m.dof();
  const Mat J = dyn::jacobian(m, q);
  const Mat M = dyn::mass_matrix(m, q);
  const Mat lambda = dyn::task_inertia(m, q, damping);
  // Dynamically consistent projector: I - J^T (Lambda J M^{-1}).
  const Mat proj = Mat::Identity(n, n) - J.transpose() * (lambda * J * M.llt().solve(Mat::Identity(n, n)));
  const Vec tau0 = g.kp_null * (q_rest - q) - g.kv_null * qdot;
  return proj * tau0;
}

Vec cartesian_impedance_torque(const dyn::ArmModel& m, const Vec& q, const Vec& qdot,
                               const Vec3& delta_x, const Vec3& kp_task, const Vec3& kv_task,
                               const Vec& q_rest, const GainSpec& g) {
  const Mat J = dyn::jacobian(m, q);
  const Vec3 xdot = J * qdot;
  const Vec3 f_task = kp_task.cwiseProduct(delta_x) - kv_task.cwiseProduct(xdot);
  return J.transpose() * f_task + dyn::gravity_torque(m, q) +
         nullspace_torque(m, q, qdot, q_rest, g);
}

Vec cartesian_impedance_torque(const dyn::ArmModel& m, const Vec& q, const Vec& qdot,
                               const Vec3& delta_x, const GainSpec& g, const Vec& q_rest) {
  return cartesian_impedance_torque(m, q, qdot, delta_x, g.kp_task, g.kv_task, q_rest, g);
}

ImpedanceGains variable_impedance_map(const Vec3& raw, const GainSpec& g) {
  ImpedanceGains out;
  for (int i = 0; i < 3; ++i) {
    const double t = 0.5 * (std::clamp(raw[i], -1.0, 1.0) + 1.0);
    const double log_kp =
        std::log(g.kp_task_min[i]) + t * (std::log(g.kp_task_max[i]) - std::log(g.kp_task_min[i]));
    out.kp[i] = std::exp(log_kp);
    out.kv[i] = 2.0 * std::sqrt(out.kp[i]);
  }
  return out;
}

DualCommand interpret_action(ControllerKind kind, const Vec& action, const dyn::ArmModel& left_m,
                             const dyn::ArmState& left_s, const dyn::ArmModel& right_m,
                             const dyn::ArmState& right_s, const GainSpec& g) {
  require(left_m.dof() == right_m.dof(), "interpret_action: arms must share dof");
  const int per_arm = arm_action_dim(kind, left_m.dof());
  require(static_cast<int>(action.size()) == 2 * per_arm, "interpret_action: action size mismatch");
  require(all_finite(action), "interpret_action: non-finite action");

  DualCommand cmd;
  cmd.kind = kind;
  auto decode = [&](const Vec& raw_in, const dyn::ArmModel& m, const dyn::ArmState& s) {
    const Vec raw = clamp_unit(raw_in);
    ArmCommand c;
    switch (kind) {
      case ControllerKind::JointPosition:
        c.q_des = s.q + g.dq_bound * raw;
        break;
      case ControllerKind::CartesianImpedance:
        c.x_des = ee_pose_vec(m, s.q) + g.dx_bound.cwiseProduct(Vec3(raw.head<3>()));
        c.kp_task = g.kp_task;
        c.kv_task = g.kv_task;
        break;
      case ControllerKind::VariableImpedance: {
        c.x_des = ee_pose_vec(m, s.q) + g.dx_bound.cwiseProduct(Vec3(raw.head<3>()));
        const ImpedanceGains ig = variable_impedance_map(Vec3(raw.segment<3>(3)), g);
        c.kp_task = ig.kp;
        c.kv_task = ig.kv;
        break;
      }
    }
    return c;
  };
  cmd.left = decode(action.head(per_arm), left_m, left_s);
  cmd.right = decode(action.tail(per_arm), right_m, right_s);
  return cmd;
}

Vec command_torque(ControllerKind kind, const ArmCommand& cmd, const dyn::ArmModel& m,
                   const dyn::ArmState& s, const GainSpec& g, const Vec& q_rest) {
  if (kind == ControllerKind::JointPosition)
    return joint_position_torque(g, cmd.q_des, s.q, s.qdot);

  // Impedance kinds: spring toward the tick's anchor pose from wherever the
  // arm currently is, with the angle error wrapped.
  const Vec3 x_now = ee_pose_vec(m, s.q);
  Vec3 dx = cmd.x_des - x_now;
  dx[2] = wrap_angle(dx[2]);
  return cartesian_impedance_torque(m, s.q, s.qdot, dx, cmd.kp_task, cmd.kv_task, q_rest, g);
}

std::pair<Vec, Vec> action_to_torques(ControllerKind kind, const Vec& action,
                                      const dyn::ArmModel& left_m, const dyn::ArmState& left_s,
                                      const dyn::ArmModel& right_m, const dyn::ArmState& right_s,
                                      const GainSpec& g, const Vec& q_rest_left,
                                      const Vec& q_rest_right) {
  const DualCommand cmd =
      interpret_action(kind, action, left_m, left_s, right_m, right_s, g);
  return {command_torque(kind, cmd.left, left_m, left_s, g, q_rest_left),
          command_torque(kind, cmd.right, right_m, right_s, g, q_rest_right)};
}

}  // namespace dualarm::ctrl
