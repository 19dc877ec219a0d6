#include "dualarm/env.hpp"

#include <cmath>

namespace dualarm::sim {

void EnvConfig::validate() const {
  left_arm.validate();
  right_arm.validate();
  require(left_arm.dof() == right_arm.dof(), "env: arms must share dof");
  require(q_init_left.size() == left_arm.dof() && q_init_right.size() == right_arm.dof(),
          "env: q_init size mismatch");
  for (int i = 0; i < left_arm.dof(); ++i) {
    require(q_init_left[i] >= left_arm.q_lower[i] && q_init_left[i] <= left_arm.q_upper[i],
            "env: q_init_left violates joint limits");
    require(q_init_right[i] >= right_arm.q_lower[i] && q_init_right[i] <= right_arm.q_upper[i],
            "env: q_init_right violates joint limits");
  }
  gains.validate(left_arm.dof());
  geometry.validate();
  contact.validate();
  require(success_delta > 0, "env: success_delta must be positive");
  require(angle_weight > 0, "env: angle_weight must be positive");
  require(insertion_fraction > 0 && insertion_fraction <= 1.0,
          "env: insertion_fraction must be in (0, 1]");
  require(insertion_fraction * geometry.hole_depth <= geometry.peg_length,
          "env: insertion target deeper than the peg is long");
  require(episode_steps > 0, "env: episode_steps must be positive");
  require(substeps >= 1, "env: substeps must be positive");
  require(sim_dt > 0, "env: sim_dt must be positive");
  require(init_offset_fraction >= 0, "env: init_offset_fraction must be non-negative");
  require(reset_retries >= 1, "env: reset_retries must be positive");
}

EnvConfig EnvConfig::facing_pair() {
  EnvConfig c;
  c.left_arm = dyn::ArmModel::default_planar(3);
  c.right_arm = dyn::ArmModel::default_planar(3);
  c.right_arm.base_pos = Vec2(1.3, 0.0);
  c.right_arm.base_heading = M_PI;
  // Elbow-bent rest postures; EEs face each other across the mid-span with
  // the peg tip well short of the hole mouth (values frozen from the
  // kinematics of default_planar(3)).
  c.q_init_left = Vec(3);
  c.q_init_left << 1.35, -2.1, 0.75;
  c.q_init_right = Vec(3);
  c.q_init_right << -1.35, 2.1, -0.75;
  c.gains = ctrl::GainSpec::defaults(3);
  return c;
}

DualArmEnv::DualArmEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  left_ = dyn::ArmState::at_rest(cfg_.q_init_left);
  right_ = dyn::ArmState::at_rest(cfg_.q_init_right);
}

int DualArmEnv::action_dim() const {
  return ctrl::action_dim(cfg_.controller, cfg_.left_arm.dof());
}

int DualArmEnv::state_dim() const { return 2 * (3 * cfg_.left_arm.dof() + 3); }

dyn::EePose DualArmEnv::ee_pose(int arm) const {
  return arm == 0 ? dyn::forward_kinematics(cfg_.left_arm, left_.q)
                  : dyn::forward_kinematics(cfg_.right_arm, right_.q);
}

Pose2 DualArmEnv::peg_pose() const {
  const dyn::EePose ee = ee_pose(cfg_.peg_on_left ? 0 : 1);
  const Pose2 ee_pose2{ee.pos, ee.theta};
  // The mount offset displaces the peg within the end-effector frame.
  Pose2 mount = cfg_.geometry.peg_mount;
  mount.p += active_mount_offset_.p;
  mount.th += active_mount_offset_.th;
  return ee_pose2.compose(mount);
}

Pose2 DualArmEnv::hole_pose() const {
  const dyn::EePose ee = ee_pose(cfg_.peg_on_left ? 1 : 0);
  return Pose2{ee.pos, ee.theta}.compose(cfg_.geometry.hole_mount);
}

Vec3 DualArmEnv::desired_goal() const {
  return {cfg_.insertion_fraction * cfg_.geometry.hole_depth, 0.0, 0.0};
}

Vec3 DualArmEnv::achieved_goal() const {
  const Pose2 tip = peg_pose().compose(Pose2{{cfg_.geometry.peg_length, 0.0}, 0.0});
  const Pose2 rel = hole_pose().inverse().compose(tip);
  return {rel.p.x(), rel.p.y(), cfg_.angle_weight * wrap_angle(rel.th)};
}

Twist2 DualArmEnv::body_twist(int arm, const Pose2& body) const {
  const dyn::ArmModel& m = arm == 0 ? cfg_.left_arm : cfg_.right_arm;
  const dyn::ArmState& s = arm == 0 ? left_ : right_;
  const Vec3 tw = dyn::ee_twist(m, s.q, s.qdot);
  const dyn::EePose ee = arm == 0 ? ee_pose(0) : ee_pose(1);
  Twist2 t;
  t.w = tw[2];
  t.v = Vec2(tw[0], tw[1]) + t.w * perp(body.p - ee.pos);
  return t;
}

Observation DualArmEnv::observe() const {
  const int n = cfg_.left_arm.dof();
  Vec state(state_dim());
  int at = 0;
  for (int arm = 0; arm < 2; ++arm) {
    const dyn::ArmState& s = arm == 0 ? left_ : right_;
    const dyn::EePose ee = ee_pose(arm);
    state.segment(at, n) = s.q;
    state.segment(at + n, n) = s.qdot;
    state.segment(at + 2 * n, n) = s.last_tau;
    state[at + 3 * n] = ee.pos.x();
    state[at + 3 * n + 1] = ee.pos.y();
    state[at + 3 * n + 2] = ee.theta;
    at += 3 * n + 3;
  }
  Observation obs;
  obs.state = std::move(state);
  obs.achieved_goal = achieved_goal();
  obs.desired_goal = desired_goal();
  return obs;
}

Observation DualArmEnv::reset(std::uint64_t seed) { return reset(seed, cfg_.init_offset_fraction); }

Observation DualArmEnv::reset(std::uint64_t seed, double init_offset_fraction) {
  require(init_offset_fraction >= 0, "reset: offset fraction must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-init_offset_fraction, init_offset_fraction);

  const int n = cfg_.left_arm.dof();
  bool placed = false;
  for (int attempt = 0; attempt < cfg_.reset_retries && !placed; ++attempt) {
    Vec ql(n), qr(n);
    for (int i = 0; i < n; ++i) ql[i] = cfg_.q_init_left[i] * (1.0 + u(rng));
    for (int i = 0; i < n; ++i) qr[i] = cfg_.q_init_right[i] * (1.0 + u(rng));
    const bool ok =
        (ql.array() >= cfg_.left_arm.q_lower.array()).all() &&
        (ql.array() <= cfg_.left_arm.q_upper.array()).all() &&
        (qr.array() >= cfg_.right_arm.q_lower.array()).all() &&
        (qr.array() <= cfg_.right_arm.q_upper.array()).all();
    if (ok) {
      left_ = dyn::ArmState::at_rest(ql);
      right_ = dyn::ArmState::at_rest(qr);
      placed = true;
    }
  }
  if (!placed) throw ContractError("reset: could not sample a pose within joint limits");

  step_count_ = 0;
  done_ = false;
  active_disturbance_ = pending_disturbance_;
  active_mount_offset_ = pending_mount_offset_;
  return observe();
}

double DualArmEnv::compute_reward(const Vec& achieved, const Vec& desired, double delta) {
  require(achieved.size() == desired.size(), "compute_reward: goal size mismatch");
  return (achieved - desired).cwiseAbs().sum() < delta ? 1.0 : 0.0;
}

StepResult DualArmEnv::step(const Vec& action) {
  require(!done_, "step: episode finished; call reset first");

  const ctrl::DualCommand cmd = ctrl::interpret_action(cfg_.controller, action, cfg_.left_arm,
                                                       left_, cfg_.right_arm, right_, cfg_.gains);
  StepResult out;
  out.info.step = step_count_ + 1;
  if (cfg_.controller == ctrl::ControllerKind::JointPosition) {
    out.info.q_des_left = cmd.left.q_des;
    out.info.q_des_right = cmd.right.q_des;
  }

  const bool disturb = active_disturbance_ && step_count_ >= active_disturbance_->start &&
                       step_count_ < active_disturbance_->end;
  out.info.disturbance_active = disturb;

  const int peg_arm = cfg_.peg_on_left ? 0 : 1;
  const int hole_arm = 1 - peg_arm;
  try {
    for (int sub = 0; sub < cfg_.substeps; ++sub) {
      const Pose2 peg = peg_pose();
      const Pose2 hole = hole_pose();
      const ContactResult contact = contact_resolve(cfg_.geometry, cfg_.contact, peg,
                                                    body_twist(peg_arm, peg), hole,
                                                    body_twist(hole_arm, hole));
      dyn::Wrench2D on_peg = contact.on_peg;
      if (disturb) on_peg += active_disturbance_->wrench;

      // Joint-space image of each body wrench: transport to the carrier's
      // end-effector point, then tau_ext = -J^T h (forward dynamics subtracts
      // tau_ext, so the environment's push on the arm enters with +J^T h).
      auto ext_torque = [&](int arm, const dyn::Wrench2D& w, const Pose2& body) {
        const dyn::ArmModel& m = arm == 0 ? cfg_.left_arm : cfg_.right_arm;
        const dyn::ArmState& s = arm == 0 ? left_ : right_;
        const dyn::EePose ee = ee_pose(arm);
        Vec3 h;
        h << w.force.x(), w.force.y(), w.torque + cross2(body.p - ee.pos, w.force);
        return Vec(-(dyn::jacobian(m, s.q).transpose() * h));
      };
      Vec ext_left = Vec::Zero(cfg_.left_arm.dof());
      Vec ext_right = Vec::Zero(cfg_.right_arm.dof());
      (peg_arm == 0 ? ext_left : ext_right) = ext_torque(peg_arm, on_peg, peg);
      (hole_arm == 0 ? ext_left : ext_right) = ext_torque(hole_arm, contact.on_hole, hole);

      const Vec tau_left = ctrl::command_torque(cfg_.controller, cmd.left, cfg_.left_arm, left_,
                                                cfg_.gains, cfg_.q_init_left);
      const Vec tau_right = ctrl::command_torque(cfg_.controller, cmd.right, cfg_.right_arm,
                                                 right_, cfg_.gains, cfg_.q_init_right);

      dyn::ArmState new_left = dyn::integrate_step(cfg_.left_arm, left_, tau_left, ext_left, cfg_.sim_dt);
      dyn::ArmState new_right =
          dyn::integrate_step(cfg_.right_arm, right_, tau_right, ext_right, cfg_.sim_dt);
      left_ = std::move(new_left);
      right_ = std::move(new_right);

      out.info.wrench_on_peg = on_peg;
      out.info.contact_normal_sum = contact.normal_sum;
      out.info.max_penetration = contact.max_depth;
    }
  } catch (const DivergedError&) {
    out.info.diverged = true;
  }

  step_count_ += 1;
  out.obs = observe();
  out.reward = out.info.diverged
                   ? 0.0
                   : compute_reward(out.obs.achieved_goal, out.obs.desired_goal, cfg_.success_delta);
  out.info.success = out.reward == 1.0;
  done_ = out.info.success || out.info.diverged || step_count_ >= cfg_.episode_steps;
  out.done = done_;
  return out;
}

void DualArmEnv::set_disturbance(const DisturbanceSpec& spec) {
  require(spec.start >= 0 && spec.start < spec.end && spec.end <= cfg_.episode_steps,
          "set_disturbance: window outside episode bounds");
  require(spec.wrench.force.allFinite() && std::isfinite(spec.wrench.torque),
          "set_disturbance: non-finite wrench");
  pending_disturbance_ = spec;
}

void DualArmEnv::clear_disturbance() { pending_disturbance_.reset(); }

void DualArmEnv::set_peg_mount_offset(const Pose2& offset) {
  require(offset.p.allFinite() && std::isfinite(offset.th), "set_peg_mount_offset: non-finite");
  pending_mount_offset_ = offset;
}

}  // namespace dualarm::sim
