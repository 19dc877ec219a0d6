#pragma once

#include "dualarm/env.hpp"
#include "dualarm/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dualarm::cli {

/// Full experiment description: task profile, arm model, controller gains,
/// contact model, RL hyperparameters, and harness settings. Built-in
/// profiles: the scaled desk profile (default) and the long-run profile
/// (chosen by --long-run or `experiment.long_run`), which uses the full
/// 7-joint setup, 0.002 m clearance, and the original training budget.
struct ExperimentConfig {
  // experiment.*
  std::string action_space = "joint_position";
  int epochs = 0;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  bool long_run = false;

  // arm.* — empty vectors mean "planar defaults for this dof"
  int dof = 3;
  Vec lengths, masses, inertias, com_offsets, friction, q_lower, q_upper, tau_limit;
  Vec2 gravity{0.0, 0.0};
  double base_span = 1.3;  // right arm base at (span, 0), heading pi

  // env.*
  double clearance = 0.008;
  double peg_width = 0.02, peg_length = 0.06;
  double hole_depth = 0.04, wall_thickness = 0.01;
  double success_delta = 0.005;
  double angle_weight = 0.05;
  double insertion_fraction = 0.6;
  int episode_steps = 200;
  int substeps = 4;
  double sim_dt = 1.0 / 240.0;
  double init_offset_fraction = 0.03;
  Vec q_init;  // left arm; the right arm starts at -q_init (mirrored base)
  bool peg_on_left = true;

  // gains.* — empty vectors mean "GainSpec defaults for this dof"
  Vec kp_joint, kv_joint;
  Vec kp_task, kv_task, kp_task_min, kp_task_max, dx_bound;  // size 3 when set
  double kp_null = 10.0, kv_null = 2.0;
  double dq_bound = 0.1;

  // contact.*
  double stiffness = 800.0, damping = 5.0;
  double friction_mu = 0.5, friction_vel = 0.01;
  double max_penetration = 0.01;

  // rl.*
  double lr = 3e-4;
  double gamma = 0.98;
  double polyak = 0.005;
  double init_alpha = 0.1;
  double target_entropy = -2.0;  // sustains per-axis exploration noise ~0.3
  double action_l2 = 0.5;  // actor's mean-squared-action penalty
  int hidden = 64;
  int q_layers = 4, pi_layers = 3;
  int batch = 128;
  std::size_t buffer = 200000;
  std::size_t warmup = 2000;
  int her_k = 6;
  int updates_per_epoch = 50;
  int eval_every = 5;
  int eval_cycles = 10;
  bool normalize_obs = true;
  double stop_success = 0.9;  // early stop once eval success reaches this; >1 disables
  int patience = 2;           // consecutive qualifying evaluations required

  // harness.*
  int disturbances = 60;
  int disturbance_cycles = 3;
  int disturbance_bins = 6;
  double force_cap = 15.0, torque_cap = 2.0;
  int disturb_start = 10, disturb_end = 40;
  Vec offset_magnitudes;  // peg-mount offset magnitudes [m]
  int offset_samples = 50;
  Vec2 trace_force{0.0, 10.0};
  double trace_torque = 0.0;

  /// Profile defaults; every field above is overridable from the file.
  static ExperimentConfig defaults(bool long_run);

  dyn::ArmModel arm_model(int side) const;  // 0 = left, 1 = right
  ctrl::GainSpec gain_spec() const;
  sim::EnvConfig env() const;
  rl::AgentConfig agent_config() const;
  rl::TrainerConfig trainer_config() const;

  /// Hash of everything that shapes the learned function and the task it was
  /// trained on (networks, action space, arm/gain/contact/task geometry) —
  /// not of the training schedule. Checkpoints refuse to load on mismatch.
  std::uint64_t structural_hash() const;

  /// Resolved config as re-parseable key/value text.
  std::string echo() const;

  /// Cross-field validation (beyond the per-key checks done while parsing).
  void validate() const;
};

/// Plain-text config: one `section.key = value` per line, `#` comments,
/// unknown keys rejected, errors reported with line numbers. Values are
/// numbers, booleans, strings, or bracketed vectors like [0.1, 0.2].
ExperimentConfig parse_config(const std::string& path, bool long_run_flag = false);
ExperimentConfig parse_config_text(const std::string& text, bool long_run_flag = false);

void write_config_echo(const std::string& path, const ExperimentConfig& cfg);

}  // namespace dualarm::cli
