#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dualarm/control.hpp"

#include <cmath>
#include <random>

using dualarm::Mat;
using dualarm::Vec;
using dualarm::Vec3;
using dualarm::ContractError;
namespace ctrl = dualarm::ctrl;
namespace dyn = dualarm::dyn;

namespace {

dyn::ArmState hold_setpoint(const dyn::ArmModel& m, const ctrl::GainSpec& g, const Vec& q0,
                            const Vec& q_des, double seconds) {
  // Simulate the joint PD holding one fixed target, no external forces.
  dyn::ArmState s = dyn::ArmState::at_rest(q0);
  const double dt = 1.0 / 240.0;
  const int steps = static_cast<int>(seconds / dt);
  for (int t = 0; t < steps; ++t) {
    const Vec tau = ctrl::joint_position_torque(g, q_des, s.q, s.qdot);
    s = dyn::integrate_step(m, s, tau, Vec::Zero(m.dof()), dt);
  }
  return s;
}

}  // namespace

TEST_CASE("action dimensions per controller kind") {
  CHECK(ctrl::arm_action_dim(ctrl::ControllerKind::JointPosition, 3) == 3);
  CHECK(ctrl::arm_action_dim(ctrl::ControllerKind::JointPosition, 7) == 7);
  CHECK(ctrl::arm_action_dim(ctrl::ControllerKind::CartesianImpedance, 7) == 3);
  CHECK(ctrl::arm_action_dim(ctrl::ControllerKind::VariableImpedance, 7) == 6);
  CHECK(ctrl::action_dim(ctrl::ControllerKind::JointPosition, 3) == 6);
  CHECK(ctrl::action_dim(ctrl::ControllerKind::CartesianImpedance, 3) == 6);
  CHECK(ctrl::action_dim(ctrl::ControllerKind::VariableImpedance, 3) == 12);
}

TEST_CASE("controller kind names round-trip") {
  for (auto k : {ctrl::ControllerKind::JointPosition, ctrl::ControllerKind::CartesianImpedance,
                 ctrl::ControllerKind::VariableImpedance})
    CHECK(ctrl::controller_from_string(ctrl::to_string(k)) == k);
  CHECK_THROWS(ctrl::controller_from_string("pid"));
}

TEST_CASE("joint PD torque formula") {
  ctrl::GainSpec g = ctrl::GainSpec::defaults(2);
  g.kp_joint = (Vec(2) << 10.0, 20.0).finished();
  g.kv_joint = (Vec(2) << 1.0, 2.0).finished();
  const Vec q = (Vec(2) << 0.2, -0.1).finished();
  const Vec q_des = (Vec(2) << 0.5, -0.1).finished();
  const Vec qdot = (Vec(2) << 0.0, 0.3).finished();
  const Vec tau = ctrl::joint_position_torque(g, q_des, q, qdot);
  CHECK(tau[0] == doctest::Approx(10.0 * 0.3));
  CHECK(tau[1] == doctest::Approx(-2.0 * 0.3));
}

TEST_CASE("joint PD converges to a feasible setpoint within 0.01 rad in 2 s") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const Vec q0 = (Vec(3) << 1.35, -2.1, 0.75).finished();
  const Vec q_des = q0 + (Vec(3) << 0.3, -0.25, 0.4).finished();
  const dyn::ArmState s = hold_setpoint(m, g, q0, q_des, 2.0);
  CHECK((s.q - q_des).cwiseAbs().maxCoeff() < 0.01);
  CHECK(s.qdot.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("cartesian impedance renders the commanded stiffness within 5%") {
  // Push the end-effector with a constant force against a fixed anchor pose;
  // the steady-state displacement must be f / kp along the pushed axis.
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const Vec q0 = (Vec(3) << 1.35, -2.1, 0.75).finished();

  ctrl::ArmCommand cmd;
  const dyn::EePose ee0 = dyn::forward_kinematics(m, q0);
  cmd.x_des = Vec3(ee0.pos.x(), ee0.pos.y(), ee0.theta);
  cmd.kp_task = g.kp_task;
  cmd.kv_task = g.kv_task;

  const double f = 0.5;  // N, along +x
  dyn::ArmState s = dyn::ArmState::at_rest(q0);
  const double dt = 1.0 / 240.0;
  for (int t = 0; t < 6 * 240; ++t) {
    const Vec tau = ctrl::command_torque(ctrl::ControllerKind::CartesianImpedance, cmd, m, s, g, q0);
    Vec3 h(f, 0.0, 0.0);
    const Vec tau_ext = -(dyn::jacobian(m, s.q).transpose() * h);
    s = dyn::integrate_step(m, s, tau, tau_ext, dt);
  }
  const dyn::EePose ee = dyn::forward_kinematics(m, s.q);
  const double disp = ee.pos.x() - ee0.pos.x();
  const double expect = f / g.kp_task[0];
  CHECK(disp == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("gravity compensation leaves zero residual acceleration") {
  dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  m.gravity = dualarm::Vec2(0.0, -9.81);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    Vec q(3);
    for (int i = 0; i < 3; ++i) q[i] = u(rng);
    // Anchor exactly at the current pose, rest posture at q: the impedance
    // term and the nullspace term both vanish, leaving pure gravity torque.
    const dyn::EePose ee = dyn::forward_kinematics(m, q);
    const Vec tau = ctrl::cartesian_impedance_torque(m, q, Vec::Zero(3),
                                                     Vec3::Zero(), g, q);
    const Vec qdd = dyn::forward_dynamics(m, q, Vec::Zero(3), tau, Vec::Zero(3));
    CHECK(qdd.cwiseAbs().maxCoeff() < 1e-8);
    (void)ee;
  }
}

TEST_CASE("variable impedance map is log-linear with exact critical damping") {
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  for (double r0 : {-1.0, -0.5, 0.0, 0.7, 1.0})
    for (double r2 : {-1.0, 0.3, 1.0}) {
      const ctrl::ImpedanceGains ig = ctrl::variable_impedance_map(Vec3(r0, 0.0, r2), g);
      for (int i = 0; i < 3; ++i) {
        CHECK(ig.kv[i] == 2.0 * std::sqrt(ig.kp[i]));  // exact, same expression
        CHECK(ig.kp[i] >= g.kp_task_min[i] * (1.0 - 1e-12));
        CHECK(ig.kp[i] <= g.kp_task_max[i] * (1.0 + 1e-12));
      }
    }

  const ctrl::ImpedanceGains lo = ctrl::variable_impedance_map(Vec3::Constant(-1.0), g);
  const ctrl::ImpedanceGains hi = ctrl::variable_impedance_map(Vec3::Constant(1.0), g);
  const ctrl::ImpedanceGains mid = ctrl::variable_impedance_map(Vec3::Zero(), g);
  for (int i = 0; i < 3; ++i) {
    CHECK(lo.kp[i] == doctest::Approx(g.kp_task_min[i]));
    CHECK(hi.kp[i] == doctest::Approx(g.kp_task_max[i]));
    CHECK(mid.kp[i] == doctest::Approx(std::sqrt(g.kp_task_min[i] * g.kp_task_max[i])));
  }

  // Raw values beyond the action range clamp to the endpoints.
  const ctrl::ImpedanceGains over = ctrl::variable_impedance_map(Vec3::Constant(4.0), g);
  for (int i = 0; i < 3; ++i) CHECK(over.kp[i] == doctest::Approx(g.kp_task_max[i]));
}

TEST_CASE("interpret_action bounds joint targets by dq_bound") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const dyn::ArmState s = dyn::ArmState::at_rest((Vec(3) << 0.4, -0.8, 0.2).finished());

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec a(6);
    for (int i = 0; i < 6; ++i) a[i] = u(rng);
    const ctrl::DualCommand cmd =
        ctrl::interpret_action(ctrl::ControllerKind::JointPosition, a, m, s, m, s, g);
    CHECK((cmd.left.q_des - s.q).cwiseAbs().maxCoeff() <= g.dq_bound + 1e-12);
    CHECK((cmd.right.q_des - s.q).cwiseAbs().maxCoeff() <= g.dq_bound + 1e-12);
  }

  // Saturated raw input lands exactly on the bound.
  const ctrl::DualCommand cmd =
      ctrl::interpret_action(ctrl::ControllerKind::JointPosition, Vec::Constant(6, 9.0), m, s, m, s, g);
  CHECK((cmd.left.q_des - s.q - Vec::Constant(3, g.dq_bound)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interpret_action anchors impedance targets at the displaced pose") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const dyn::ArmState s = dyn::ArmState::at_rest((Vec(3) << 1.0, -1.5, 0.3).finished());
  const dyn::EePose ee = dyn::forward_kinematics(m, s.q);

  Vec a(6);
  a << 1.0, -0.5, 0.25, 0.0, 0.0, 0.0;
  const ctrl::DualCommand cmd =
      ctrl::interpret_action(ctrl::ControllerKind::CartesianImpedance, a, m, s, m, s, g);
  CHECK(cmd.left.x_des[0] == doctest::Approx(ee.pos.x() + g.dx_bound[0]));
  CHECK(cmd.left.x_des[1] == doctest::Approx(ee.pos.y() - 0.5 * g.dx_bound[1]));
  CHECK(cmd.left.x_des[2] == doctest::Approx(ee.theta + 0.25 * g.dx_bound[2]));
  CHECK(cmd.left.kp_task.isApprox(g.kp_task));
  CHECK(cmd.left.kv_task.isApprox(g.kv_task));

  // Variable impedance: trailing triple picks the stiffness.
  Vec av(12);
  av.setZero();
  av.segment(3, 3).setConstant(1.0);   // left arm stiffness -> max
  av.segment(9, 3).setConstant(-1.0);  // right arm stiffness -> min
  const ctrl::DualCommand vc =
      ctrl::interpret_action(ctrl::ControllerKind::VariableImpedance, av, m, s, m, s, g);
  for (int i = 0; i < 3; ++i) {
    CHECK(vc.left.kp_task[i] == doctest::Approx(g.kp_task_max[i]));
    CHECK(vc.right.kp_task[i] == doctest::Approx(g.kp_task_min[i]));
  }
}

TEST_CASE("interpret_action validates its input") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const dyn::ArmState s = dyn::ArmState::at_rest(Vec::Zero(3));
  CHECK_THROWS_AS(ctrl::interpret_action(ctrl::ControllerKind::JointPosition, Vec::Zero(5), m, s,
                                         m, s, g),
                  ContractError);
  Vec bad = Vec::Zero(6);
  bad[2] = std::nan("");
  CHECK_THROWS_AS(ctrl::interpret_action(ctrl::ControllerKind::JointPosition, bad, m, s, m, s, g),
                  ContractError);
}

TEST_CASE("nullspace torque produces no end-effector force") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vec q(3), q_rest(3);
    for (int i = 0; i < 3; ++i) {
      q[i] = 0.5 + 0.8 * u(rng);  // keep away from the outstretched singularity
      q_rest[i] = q[i] + 0.3 * u(rng);
    }
    const Mat J = dyn::jacobian(m, q);
    const Mat Minv = dyn::mass_matrix(m, q).inverse();
    const Vec tau0 = g.kp_null * (q_rest - q);
    const Vec tau_null = ctrl::nullspace_torque(m, q, Vec::Zero(3), q_rest, g);
    // Instantaneous task acceleration from the raw posture torque vs the
    // projected one: the projector must remove nearly all of it.
    const double raw = (J * Minv * tau0).norm();
    const double projected = (J * Minv * tau_null).norm();
    if (raw > 1e-9) CHECK(projected <= 0.02 * raw + 1e-9);
  }
}

TEST_CASE("command_torque matches its per-kind building blocks") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  dyn::ArmState s = dyn::ArmState::at_rest((Vec(3) << 0.9, -1.2, 0.4).finished());
  s.qdot = (Vec(3) << 0.1, -0.05, 0.2).finished();
  const Vec q_rest = (Vec(3) << 1.0, -1.0, 0.5).finished();

  ctrl::ArmCommand jp;
  jp.q_des = s.q + Vec::Constant(3, 0.05);
  const Vec tau_jp = ctrl::command_torque(ctrl::ControllerKind::JointPosition, jp, m, s, g, q_rest);
  CHECK(tau_jp.isApprox(ctrl::joint_position_torque(g, jp.q_des, s.q, s.qdot)));

  const dyn::EePose ee = dyn::forward_kinematics(m, s.q);
  ctrl::ArmCommand ci;
  ci.x_des = Vec3(ee.pos.x() + 0.01, ee.pos.y() - 0.02, ee.theta + 0.1);
  ci.kp_task = g.kp_task;
  ci.kv_task = g.kv_task;
  const Vec tau_ci =
      ctrl::command_torque(ctrl::ControllerKind::CartesianImpedance, ci, m, s, g, q_rest);
  const Vec expect = ctrl::cartesian_impedance_torque(
      m, s.q, s.qdot, Vec3(0.01, -0.02, 0.1), g.kp_task, g.kv_task, q_rest, g);
  CHECK(tau_ci.isApprox(expect, 1e-12));
}

TEST_CASE("command_torque wraps the anchor angle error") {
  const dyn::ArmModel m = dyn::ArmModel::default_planar(3);
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const dyn::ArmState s = dyn::ArmState::at_rest((Vec(3) << 0.9, -1.2, 0.4).finished());
  const dyn::EePose ee = dyn::forward_kinematics(m, s.q);

  ctrl::ArmCommand a, b;
  a.kp_task = b.kp_task = g.kp_task;
  a.kv_task = b.kv_task = g.kv_task;
  a.x_des = Vec3(ee.pos.x(), ee.pos.y(), ee.theta - 0.1);
  b.x_des = Vec3(ee.pos.x(), ee.pos.y(), ee.theta - 0.1 + 2.0 * M_PI);
  const Vec ta = ctrl::command_torque(ctrl::ControllerKind::CartesianImpedance, a, m, s, g, s.q);
  const Vec tb = ctrl::command_torque(ctrl::ControllerKind::CartesianImpedance, b, m, s, g, s.q);
  CHECK(ta.isApprox(tb, 1e-9));
}

TEST_CASE("action_to_torques equals interpret + command per arm") {
  const dyn::ArmModel left = dyn::ArmModel::default_planar(3);
  dyn::ArmModel right = dyn::ArmModel::default_planar(3);
  right.base_pos = dualarm::Vec2(1.3, 0.0);
  right.base_heading = M_PI;
  const ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  const dyn::ArmState ls = dyn::ArmState::at_rest((Vec(3) << 1.35, -2.1, 0.75).finished());
  const dyn::ArmState rs = dyn::ArmState::at_rest((Vec(3) << -1.35, 2.1, -0.75).finished());
  const Vec ql = ls.q, qr = rs.q;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec a(12);
  for (int i = 0; i < 12; ++i) a[i] = u(rng);

  const auto kind = ctrl::ControllerKind::VariableImpedance;
  const auto [tl, tr] = ctrl::action_to_torques(kind, a, left, ls, right, rs, g, ql, qr);
  const ctrl::DualCommand cmd = ctrl::interpret_action(kind, a, left, ls, right, rs, g);
  CHECK(tl.isApprox(ctrl::command_torque(kind, cmd.left, left, ls, g, ql)));
  CHECK(tr.isApprox(ctrl::command_torque(kind, cmd.right, right, rs, g, qr)));
}

TEST_CASE("gain spec validation rejects malformed configurations") {
  ctrl::GainSpec g = ctrl::GainSpec::defaults(3);
  CHECK_NOTHROW(g.validate(3));
  CHECK_THROWS_AS(g.validate(4), ContractError);

  ctrl::GainSpec bad = ctrl::GainSpec::defaults(3);
  bad.kp_task_min[1] = -2.0;
  CHECK_THROWS_AS(bad.validate(3), ContractError);

  bad = ctrl::GainSpec::defaults(3);
  bad.kp_task_min[0] = bad.kp_task_max[0] * 2.0;
  CHECK_THROWS_AS(bad.validate(3), ContractError);

  bad = ctrl::GainSpec::defaults(3);
  bad.dq_bound = 0.0;
  CHECK_THROWS_AS(bad.validate(3), ContractError);
}
