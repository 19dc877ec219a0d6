#include "dualarm/replay.hpp"

#include <algorithm>

namespace dualarm::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity >= 1, "replay: capacity must be positive");
}

void ReplayBuffer::add_episode(std::vector<Transition> episode) {
  require(!episode.empty(), "replay: empty episode");
  require(episode.size() <= capacity_, "replay: episode larger than buffer capacity");
  const std::uint64_t id = episode.front().episode_id;
  for (std::size_t i = 0; i < episode.size(); ++i) {
    require(episode[i].episode_id == id, "replay: mixed episode ids in one episode");
    require(episode[i].step_index == static_cast<int>(i), "replay: non-contiguous step indices");
  }
  size_ += episode.size();
  episodes_.push_back(std::move(episode));
  while (size_ > capacity_) {
    size_ -= episodes_.front().size();
    episodes_.pop_front();
  }
  cum_valid_ = false;
}

void ReplayBuffer::refresh_cum() const {
  cum_.resize(episodes_.size());
  std::size_t total = 0;
  for (std::size_t e = 0; e < episodes_.size(); ++e) {
    total += episodes_[e].size();
    cum_[e] = total;
  }
  cum_valid_ = true;
}

const std::vector<Transition>& ReplayBuffer::episode_of(std::size_t i, std::size_t* offset) const {
  require(i < size_, "replay: index out of range");
  if (!cum_valid_) refresh_cum();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), i);
  const std::size_t e = static_cast<std::size_t>(it - cum_.begin());
  const std::size_t before = e == 0 ? 0 : cum_[e - 1];
  if (offset) *offset = i - before;
  return episodes_[e];
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  std::size_t off = 0;
  const std::vector<Transition>& ep = episode_of(i, &off);
  return ep[off];
}

Batch her_sample(const ReplayBuffer& buffer, int batch_size, int k, const RewardFn& reward_fn,
                 std::mt19937_64& rng) {
  require(batch_size >= 1, "her_sample: batch_size must be positive");
  require(k >= 0, "her_sample: k must be non-negative");
  require(buffer.size() >= static_cast<std::size_t>(batch_size),
          "her_sample: buffer smaller than batch");
  require(static_cast<bool>(reward_fn), "her_sample: reward_fn required");

  const Transition& probe = buffer.at(0);
  const int obs_dim = static_cast<int>(probe.obs.size());
  const int act_dim = static_cast<int>(probe.action.size());
  const int goal_dim = static_cast<int>(probe.desired_goal.size());

  Batch b;
  b.obs.resize(obs_dim, batch_size);
  b.next_obs.resize(obs_dim, batch_size);
  b.action.resize(act_dim, batch_size);
  b.goal.resize(goal_dim, batch_size);
  b.next_achieved.resize(goal_dim, batch_size);
  b.reward.resize(batch_size);
  b.done.resize(batch_size);
  b.relabeled.resize(batch_size);
  b.episode_id.resize(batch_size);
  b.step_index.resize(batch_size);
  b.future_index.resize(batch_size);

  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double relabel_p = k == 0 ? 0.0 : static_cast<double>(k) / (k + 1);

  for (int s = 0; s < batch_size; ++s) {
    std::size_t offset = 0;
    const std::size_t flat = pick(rng);
    const std::vector<Transition>& ep = buffer.episode_of(flat, &offset);
    const Transition& tr = ep[offset];

    b.obs.col(s) = tr.obs;
    b.next_obs.col(s) = tr.next_obs;
    b.action.col(s) = tr.action;
    b.next_achieved.col(s) = tr.next_achieved_goal;
    b.episode_id[s] = tr.episode_id;
    b.step_index[s] = tr.step_index;

    const bool relabel = relabel_p > 0.0 && unit(rng) < relabel_p;
    if (relabel) {
      std::uniform_int_distribution<std::size_t> future(offset, ep.size() - 1);
      const std::size_t j = future(rng);
      const Vec& new_goal = ep[j].next_achieved_goal;
      const double r = reward_fn(tr.next_achieved_goal, new_goal);
      b.goal.col(s) = new_goal;
      b.reward[s] = r;
      b.done[s] = r > 0.5 ? 1.0 : 0.0;
      b.relabeled[s] = 1;
      b.future_index[s] = static_cast<int>(j);
    } else {
      b.goal.col(s) = tr.desired_goal;
      b.reward[s] = tr.reward;
      b.done[s] = tr.done ? 1.0 : 0.0;
      b.relabeled[s] = 0;
      b.future_index[s] = -1;
    }
  }
  return b;
}

}  // namespace dualarm::rl
