#include "dualarm/trainer.hpp"

#include <sstream>

namespace dualarm::rl {

void TrainerConfig::validate() const {
  require(updates_per_epoch >= 0, "trainer: updates_per_epoch must be non-negative");
  require(batch_size >= 1, "trainer: batch_size must be positive");
  require(buffer_capacity >= static_cast<std::size_t>(batch_size),
          "trainer: buffer smaller than one batch");
  require(eval_every >= 1, "trainer: eval_every must be positive");
  require(eval_cycles >= 1, "trainer: eval_cycles must be positive");
  require(her_k >= 0, "trainer: her_k must be non-negative");
}

Trainer::Trainer(AgentParams agent, sim::DualArmEnv env, TrainerConfig cfg, std::uint64_t seed)
    : agent_(std::move(agent)),
      env_(std::move(env)),
      cfg_(cfg),
      buffer_(cfg.buffer_capacity),
      rng_(derive_seed(seed, 0, 0)),
      seed_(seed) {
  cfg_.validate();
  require(agent_.cfg.obs_dim == env_.state_dim(), "trainer: agent/env observation size mismatch");
  require(agent_.cfg.goal_dim == env_.goal_dim(), "trainer: agent/env goal size mismatch");
  require(agent_.cfg.action_dim == env_.action_dim(), "trainer: agent/env action size mismatch");
}

EpochReport Trainer::train_epoch() {
  epoch_ += 1;
  EpochReport rep;
  rep.epoch = epoch_;

  // One stochastic exploration episode.
  sim::Observation obs = env_.reset(derive_seed(seed_, 1, episode_counter_));
  std::vector<Transition> episode;
  episode.reserve(env_.config().episode_steps);
  for (int t = 0;; ++t) {
    const Vec action = select_action(agent_, obs.state, obs.desired_goal, false, rng_);
    const sim::StepResult sr = env_.step(action);

    Transition tr;
    tr.obs = obs.state;
    tr.achieved_goal = obs.achieved_goal;
    tr.desired_goal = obs.desired_goal;
    tr.action = action;
    tr.next_obs = sr.obs.state;
    tr.next_achieved_goal = sr.obs.achieved_goal;
    tr.reward = sr.reward;
    tr.done = sr.info.success;  // timeouts are not true terminals
    tr.episode_id = episode_counter_;
    tr.step_index = t;
    episode.push_back(std::move(tr));

    rep.episode_reward += sr.reward;
    obs = sr.obs;
    if (sr.done) break;
  }
  rep.episode_length = static_cast<int>(episode.size());
  episode_counter_ += 1;
  buffer_.add_episode(std::move(episode));
  rep.buffer_size = buffer_.size();

  // Optimization block once warmup data exists.
  if (buffer_.size() >= cfg_.warmup_samples) {
    const double delta = env_.config().success_delta;
    const RewardFn reward_fn = [delta](const Vec& achieved, const Vec& desired) {
      return sim::DualArmEnv::compute_reward(achieved, desired, delta);
    };
    rep.losses.reserve(cfg_.updates_per_epoch);
    for (int u = 0; u < cfg_.updates_per_epoch; ++u) {
      Batch batch = her_sample(buffer_, cfg_.batch_size, cfg_.her_k, reward_fn, rng_);
      rep.losses.push_back(sac_update(agent_, batch, rng_));
    }
  }

  if (epoch_ % cfg_.eval_every == 0) rep.eval_success = evaluate(cfg_.eval_cycles);
  return rep;
}

double Trainer::evaluate(int cycles) const {
  return evaluate_policy(agent_, env_, cycles, derive_seed(seed_, 2, epoch_));
}

std::string Trainer::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void Trainer::restore(int epoch, std::uint64_t episode_counter, const std::string& rng_state) {
  epoch_ = epoch;
  episode_counter_ = episode_counter;
  if (!rng_state.empty()) {
    std::istringstream is(rng_state);
    is >> rng_;
    require(!is.fail(), "trainer: malformed RNG state");
  }
}

double evaluate_policy(const AgentParams& agent, const sim::DualArmEnv& env, int cycles,
                       std::uint64_t seed_base) {
  require(cycles >= 1, "evaluate_policy: cycles must be positive");
  std::mt19937_64 unused(0);  // deterministic actions draw nothing
  double successes = 0.0;
  for (int c = 0; c < cycles; ++c) {
    sim::DualArmEnv rollout = env;
    sim::Observation obs = rollout.reset(derive_seed(seed_base, 3, c));
    while (true) {
      const Vec a = select_action(agent, obs.state, obs.desired_goal, true, unused);
      const sim::StepResult sr = rollout.step(a);
      obs = sr.obs;
      if (sr.done) {
        successes += sr.info.success ? 1.0 : 0.0;
        break;
      }
    }
  }
  return successes / cycles;
}

}  // namespace dualarm::rl
