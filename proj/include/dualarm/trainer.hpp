#pragma once

#include "dualarm/env.hpp"
#include "dualarm/sac.hpp"

#include <string>

namespace dualarm::rl {

struct TrainerConfig {
  int updates_per_epoch = 1000;
  int batch_size = 256;
  std::size_t buffer_capacity = 800000;
  std::size_t warmup_samples = 10000;  // updates start once the buffer holds this many
  int her_k = 6;
  int eval_every = 5;   // evaluation at epochs eval_every, 2*eval_every, ...
  int eval_cycles = 10;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  int episode_length = 0;
  double episode_reward = 0.0;
  std::size_t buffer_size = 0;
  std::vector<LossReport> losses;   // one record per optimization step
  double eval_success = -1.0;       // negative when this epoch had no evaluation
};

/// One exploration episode into the buffer, then a block of SAC updates, with
/// periodic deterministic evaluation. Fully deterministic given the seed.
class Trainer {
 public:
  Trainer(AgentParams agent, sim::DualArmEnv env, TrainerConfig cfg, std::uint64_t seed);

  EpochReport train_epoch();

  /// Mean success over `cycles` deterministic episodes on a copy of the env,
  /// seeded from (seed, epoch, cycle); does not advance training RNG.
  double evaluate(int cycles) const;

  const AgentParams& agent() const { return agent_; }
  AgentParams& agent() { return agent_; }
  const sim::DualArmEnv& env() const { return env_; }
  int epoch() const { return epoch_; }
  std::size_t buffer_size() const { return buffer_.size(); }

  // Checkpoint plumbing.
  std::string rng_state() const;
  void restore(int epoch, std::uint64_t episode_counter, const std::string& rng_state);
  std::uint64_t episode_counter() const { return episode_counter_; }
  std::uint64_t base_seed() const { return seed_; }

 private:
  AgentParams agent_;
  sim::DualArmEnv env_;
  TrainerConfig cfg_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  std::uint64_t seed_;
  int epoch_ = 0;
  std::uint64_t episode_counter_ = 0;
};

/// Deterministic-policy success rate on a copy of env over seeded episodes.
double evaluate_policy(const AgentParams& agent, const sim::DualArmEnv& env, int cycles,
                       std::uint64_t seed_base);

/// Versioned binary checkpoint of the full agent plus trainer counters. The
/// structural hash must match on load; mismatches throw ConfigError.
struct Checkpoint {
  std::uint64_t structural_hash = 0;
  AgentParams agent;
  int epoch = 0;
  std::uint64_t episode_counter = 0;
  std::string trainer_rng;  // empty when saved outside training
  double best_success = -1.0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_hash);

}  // namespace dualarm::rl
