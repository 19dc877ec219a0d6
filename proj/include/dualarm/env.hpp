#pragma once

#include "dualarm/control.hpp"
#include "dualarm/geometry.hpp"

#include <optional>
#include <random>

namespace dualarm::sim {

/// Success predicate parameters: encoded desired goal and L1 threshold.
struct GoalSpec {
  Vec3 desired{0.0, 0.0, 0.0};
  double delta = 0.005;
};

struct Observation {
  Vec state;          // [q0, qd0, tau0, ee_pos0, ee_ori0, q1, qd1, tau1, ee_pos1, ee_ori1]
  Vec achieved_goal;  // peg-tip pose in the hole frame, angle pre-weighted
  Vec desired_goal;
};

/// Wrench applied to the peg body (about the peg frame origin) during policy
/// steps [start, end) of an episode.
struct DisturbanceSpec {
  dyn::Wrench2D wrench;
  int start = 10;
  int end = 40;
};

struct EnvConfig {
  dyn::ArmModel left_arm, right_arm;
  Vec q_init_left, q_init_right;
  ctrl::ControllerKind controller = ctrl::ControllerKind::JointPosition;
  ctrl::GainSpec gains = ctrl::GainSpec::defaults(3);
  PegHoleGeometry geometry;
  ContactParams contact;
  bool peg_on_left = true;
  double success_delta = 0.005;     // success threshold, L1 over the encoded goal
  double angle_weight = 0.05;       // m per rad in the encoded goal
  double insertion_fraction = 0.6;  // target tip depth as a fraction of hole depth
  int episode_steps = 400;
  int substeps = 4;
  double sim_dt = 1.0 / 240.0;
  double init_offset_fraction = 0.03;
  int reset_retries = 100;

  void validate() const;

  /// Two default_planar(3) arms facing each other across a 1.3 m span, with
  /// elbow-bent initial postures placing the peg a few centimeters short of
  /// the hole mouth. Geometry/gain defaults as documented per module.
  static EnvConfig facing_pair();
};

struct StepInfo {
  bool success = false;
  bool diverged = false;
  int step = 0;                // 1-based count of completed policy steps
  Vec q_des_left, q_des_right; // joint-position targets (empty for other kinds)
  dyn::Wrench2D wrench_on_peg; // contact + disturbance, last substep
  double contact_normal_sum = 0.0;
  double max_penetration = 0.0;
  bool disturbance_active = false;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Dual-arm peg-in-hole environment: two independently controlled planar arms
/// coupled only through contact and through whatever policy drives them.
/// Policy rate = sim rate / substeps (60 Hz on 240 Hz dynamics by default).
class DualArmEnv {
 public:
  explicit DualArmEnv(EnvConfig cfg);

  /// Sample initial joint positions q_init .* (1 + u), u ~ U[-f, f] per joint,
  /// with the config's offset fraction f; velocities zero.
  Observation reset(std::uint64_t seed);
  Observation reset(std::uint64_t seed, double init_offset_fraction);

  /// Advance one policy step (substeps dynamics steps with the action's
  /// interpreted command held). Throws ContractError when called on a
  /// finished episode.
  StepResult step(const Vec& action);

  /// Sparse success reward: 1 if sum_i |achieved_i - desired_i| < delta, else 0.
  static double compute_reward(const Vec& achieved, const Vec& desired, double delta);

  /// Applied to episodes started after this call.
  void set_disturbance(const DisturbanceSpec& spec);
  void clear_disturbance();
  /// Extra peg-in-end-effector mounting offset (x, y in the EE frame, plus
  /// angle), applied to episodes started after this call. Unobserved.
  void set_peg_mount_offset(const Pose2& offset);

  int action_dim() const;
  int state_dim() const;
  int goal_dim() const { return 3; }
  Vec3 desired_goal() const;
  Vec3 achieved_goal() const;

  const EnvConfig& config() const { return cfg_; }
  const dyn::ArmState& arm_state(int arm) const { return arm == 0 ? left_ : right_; }
  dyn::EePose ee_pose(int arm) const;
  Pose2 peg_pose() const;   // world pose of the peg frame (offset included)
  Pose2 hole_pose() const;  // world pose of the hole frame
  int steps_taken() const { return step_count_; }
  bool episode_done() const { return done_; }

 private:
  Observation observe() const;
  Twist2 body_twist(int arm, const Pose2& body) const;

  EnvConfig cfg_;
  dyn::ArmState left_, right_;
  int step_count_ = 0;
  bool done_ = true;  // require reset before first step
  std::optional<DisturbanceSpec> pending_disturbance_, active_disturbance_;
  Pose2 pending_mount_offset_, active_mount_offset_;
};

}  // namespace dualarm::sim
