#pragma once

#include "dualarm/net.hpp"
#include "dualarm/replay.hpp"

#include <limits>

namespace dualarm::rl {

struct AgentConfig {
  int obs_dim = 0;
  int goal_dim = 0;
  int action_dim = 0;
  int hidden = 256;
  int q_layers = 4;   // linear layers in each Q network
  int pi_layers = 3;  // linear layers in the policy network
  double lr = 1e-5;
  double gamma = 0.98;
  double polyak = 0.005;  // target-network update factor
  double init_alpha = 0.1;
  double target_entropy = 0.0;  // 0 -> use -action_dim
  // Added to every replay reward inside the TD target (the buffer itself is
  // untouched). With success-terminated episodes a bias of -1 turns the 0/1
  // success reward into a per-step cost, so Q approximates -(steps to goal)
  // and even reward-free trajectory segments carry a value gradient.
  double reward_bias = 0.0;
  // TD targets are clamped to [target_min, target_max] before the critic
  // regression. Bounding them by the attainable return range stops twin-critic
  // overestimation from compounding through the bootstrap.
  double target_min = -std::numeric_limits<double>::infinity();
  double target_max = std::numeric_limits<double>::infinity();
  // Actor regularization: action_l2 * mean ||a||^2 added to the policy
  // objective. Keeps the maximizer from saturating the tanh in regions where
  // the critic is extrapolating (e.g. goals far from the replay data).
  double action_l2 = 0.0;
  Vec obs_scale, goal_scale;    // fixed input scaling; empty -> ones

  int input_dim() const { return obs_dim + goal_dim; }
  void validate() const;
};

struct AgentParams {
  AgentConfig cfg;
  net::MlpParams policy;           // outputs mean (+) log_std
  net::MlpParams q1, q2;           // online critics
  net::MlpParams q1_target, q2_target;
  net::AdamState policy_opt, q1_opt, q2_opt;
  double log_alpha = 0.0;
  net::ScalarAdam alpha_opt;
  std::uint64_t updates = 0;
  std::uint64_t numeric_warnings = 0;

  double alpha() const { return std::exp(log_alpha); }
};

/// Fresh agent; consumes rng in a fixed order (policy, q1, q2). Targets start
/// as copies of the online critics. The final policy layer is scaled by 0.01
/// so initial actions hover near zero.
AgentParams make_agent(const AgentConfig& cfg, std::mt19937_64& rng);

/// Policy action in (-1,1)^d for one observation + goal. Deterministic mode
/// returns tanh(mean) and does not consume rng.
Vec select_action(const AgentParams& agent, const Vec& obs, const Vec& goal, bool deterministic,
                  std::mt19937_64& rng);

struct LossReport {
  double q1_loss = 0.0, q2_loss = 0.0;
  double policy_loss = 0.0, alpha_loss = 0.0;
  double mean_q = 0.0;        // batch mean of min online Q
  double mean_log_prob = 0.0;
  double alpha = 0.0;
  bool skipped = false;       // non-finite loss/gradient guard fired
};

/// Instrumentation of one update's target computation (test hook).
struct UpdateTrace {
  Vec q1_target_vals, q2_target_vals;  // target-network outputs at (s', a')
  Vec next_log_prob;
  Vec targets;  // y = r + gamma (1 - done) (min - alpha log pi'), then clamped
};

/// One SAC step: twin-critic regression toward the target computed from the
/// TARGET networks, reparameterized policy step on min online Q plus entropy,
/// temperature step toward the entropy target, then Polyak target update.
/// Non-finite losses or gradients skip the whole update and count a warning.
LossReport sac_update(AgentParams& agent, const Batch& batch, std::mt19937_64& rng,
                      UpdateTrace* trace = nullptr);

/// Scaled network input [obs_scale .* obs ; goal_scale .* goal] as one column.
Vec assemble_input(const AgentConfig& cfg, const Vec& obs, const Vec& goal);
Mat assemble_input(const AgentConfig& cfg, const Mat& obs, const Mat& goal);

/// Policy objective mean(alpha log pi - min Q + action_l2 ||a||^2) evaluated
/// with the given policy parameters and fixed exploration noise; optionally
/// returns the gradient w.r.t. the policy parameters and the batch-mean
/// log-prob. Exposed for finite-difference verification of the analytic
/// gradient.
double policy_objective(const AgentParams& agent, const net::MlpParams& policy, const Batch& batch,
                        const Mat& noise, net::MlpParams* grad = nullptr,
                        double* mean_log_prob = nullptr);

}  // namespace dualarm::rl
