#pragma once

#include "dualarm/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dualarm::harness {

/// Fraction of deterministic-policy episodes ending in success.
double success_rate(const rl::AgentParams& agent, const sim::DualArmEnv& env, int cycles,
                    std::uint64_t seed);

/// Hand-built insertion oracle reading true poses from the environment: the
/// peg carrier servos the peg tip to a standoff point in front of the hole
/// mouth, aligns, then advances to the insertion target; the other arm holds
/// its initial posture. Used to validate goal detection and as a baseline.
class ScriptedPolicy {
 public:
  explicit ScriptedPolicy(double standoff = 0.02, double align_tol = 0.004);
  Vec act(const sim::DualArmEnv& env) const;

 private:
  double standoff_, align_tol_;
};

/// Run the scripted oracle for one episode; returns final reward.
double scripted_episode(sim::DualArmEnv& env, std::uint64_t seed, int max_steps = 0);

struct DisturbanceSample {
  double offset = 0.0;     // max peg-carrier end-effector deviation vs reference [m]
  int duration = 0;        // disturbed episode length [policy steps]
  int ref_duration = 0;    // undisturbed episode length
  bool success = false;
  dyn::Wrench2D wrench;
};

struct DisturbanceBin {
  double center = 0.0;
  double mean_duration = 0.0;
  int count = 0;
};

struct DisturbanceResult {
  std::vector<DisturbanceSample> samples;
  std::vector<DisturbanceBin> bins;
};

/// Robustness study: sample random peg wrenches (uniform
/// magnitude up to the caps), run disturbed vs undisturbed episodes with the
/// deterministic policy, report (end-effector offset, episode duration) pairs
/// plus equal-width binned means.
DisturbanceResult disturbance_experiment(const rl::AgentParams& agent, const sim::DualArmEnv& env,
                                         int n_disturbances, int cycles, std::uint64_t seed,
                                         double force_cap, double torque_cap, int start, int end,
                                         int n_bins);

struct OffsetPoint {
  double magnitude = 0.0;
  double success = 0.0;
  int samples = 0;
};

/// Success rate under random peg-mount offsets of each magnitude (direction
/// uniform per sample; the offset is invisible to the policy).
std::vector<OffsetPoint> offset_experiment(const rl::AgentParams& agent,
                                           const sim::DualArmEnv& env,
                                           const std::vector<double>& magnitudes, int n_samples,
                                           std::uint64_t seed);

struct TraceRecord {
  int step = 0;
  Vec q_left, q_right;
  Vec q_des_left, q_des_right;  // empty unless joint-position control
  Vec3 ee_left, ee_right;
  Vec action;
  double reward = 0.0;
  double contact_normal = 0.0;
  bool disturbance_active = false;
};

/// One deterministic episode, optionally disturbed, recorded step by step.
std::vector<TraceRecord> rollout_trace(const rl::AgentParams& agent, sim::DualArmEnv env,
                                       const std::optional<sim::DisturbanceSpec>& disturbance,
                                       std::uint64_t seed);

/// JSON-lines export (meta line first, then one record per policy step).
/// Requires the joint-position action space so q_des traces exist.
void write_trace_jsonl(const std::string& path, const std::vector<TraceRecord>& trace,
                       std::uint64_t config_hash,
                       const std::optional<sim::DisturbanceSpec>& disturbance);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct SuccessRow {
  std::string action_space;
  double clearance = 0.0;
  int epoch = 0;
  std::uint64_t seed = 0;
  double success = 0.0;
};

void write_success_csv(const std::string& path, const std::vector<SuccessRow>& rows,
                       std::uint64_t config_hash);
void write_disturbance_csv(const std::string& path, const DisturbanceResult& result,
                           std::uint64_t config_hash);
void write_disturbance_bins_csv(const std::string& path, const DisturbanceResult& result,
                                std::uint64_t config_hash);
void write_offsets_csv(const std::string& path, const std::vector<OffsetPoint>& points,
                       std::uint64_t config_hash);

}  // namespace dualarm::harness
