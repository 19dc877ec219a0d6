#pragma once

#include "dualarm/types.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <vector>

namespace dualarm::rl {

struct Transition {
  Vec obs, action, next_obs;
  Vec achieved_goal, next_achieved_goal, desired_goal;
  double reward = 0.0;
  bool done = false;  // true terminal (success), not timeout
  std::uint64_t episode_id = 0;
  int step_index = 0;
};

/// Episode-granular ring buffer: whole episodes are appended and the oldest
/// episodes are evicted first, so future-goal lookups never dangle or cross
/// episode boundaries.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add_episode(std::vector<Transition> episode);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t episode_count() const { return episodes_.size(); }

  /// Flat view: transition i in insertion order, i < size().
  const Transition& at(std::size_t i) const;
  /// The episode containing flat index i, with i's offset inside it.
  const std::vector<Transition>& episode_of(std::size_t i, std::size_t* offset) const;

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::deque<std::vector<Transition>> episodes_;
  mutable std::vector<std::size_t> cum_;  // cumulative episode sizes
  mutable bool cum_valid_ = false;
  void refresh_cum() const;
};

/// Column-major batch (one column per sample) with relabeling audit trails.
struct Batch {
  Mat obs, next_obs;          // obs_dim x B
  Mat action;                 // act_dim x B
  Mat goal;                   // goal_dim x B, after relabeling
  Mat next_achieved;          // goal_dim x B (audit: reward recomputation)
  Vec reward;                 // B
  Vec done;                   // B, in {0,1}
  std::vector<std::uint8_t> relabeled;    // B flags
  std::vector<std::uint64_t> episode_id;  // B source episodes
  std::vector<int> step_index;            // B source steps
  std::vector<int> future_index;          // B, relabel source step (-1 if none)

  int size() const { return static_cast<int>(reward.size()); }
};

using RewardFn = std::function<double(const Vec& achieved, const Vec& desired)>;

/// Uniformly sample batch_size transitions; each is independently relabeled
/// with probability k/(k+1) ("future" strategy): the goal becomes the
/// next_achieved_goal of a uniformly drawn step j >= t of the same episode,
/// and the reward/done are recomputed with reward_fn on the transition's own
/// next_achieved_goal. k = 0 disables relabeling.
Batch her_sample(const ReplayBuffer& buffer, int batch_size, int k, const RewardFn& reward_fn,
                 std::mt19937_64& rng);

}  // namespace dualarm::rl
