#pragma once

#include <optional>
#include <vector>

#include "cgr/env.hpp"

namespace cgr {

struct Transition {
  Vector state;
  Action action;
  /// Absent when the gate skipped the environment reward for this step.
  std::optional<double> reward;
  bool terminal = false;
  Vector next_state;
  /// Goal the transition was collected under (goal environments only).
  std::optional<Vector> goal;
  /// Goal actually achieved in next_state (goal environments only).
  std::optional<Vector> achieved;
};

/// Fixed-capacity FIFO store of transitions. A buffer built with
/// `require_reward` rejects transitions whose reward is absent.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity, bool require_reward = false);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  bool requires_reward() const { return require_reward_; }
  /// i-th surviving transition, oldest first.
  const Transition& operator[](std::size_t i) const;

 private:
  std::size_t capacity_;
  bool require_reward_;
  std::vector<Transition> items_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
};

/// Holds every transition; rewards may be absent.
inline RingBuffer make_replay_buffer(std::size_t capacity) { return RingBuffer(capacity, false); }
/// Holds only transitions with an environment (or computed) reward.
inline RingBuffer make_feedback_buffer(std::size_t capacity) { return RingBuffer(capacity, true); }

/// Uniform sampling with replacement.
std::vector<Transition> sample_minibatch(const RingBuffer& buffer, std::size_t batch_size, Rng& rng);

/// Hindsight relabeling with the "future" strategy. For each step t with a
/// later step available, emits `k` copies whose goal is the goal achieved
/// at a uniformly drawn step t' in (t, L) of the episode, i.e. the achieved
/// goal of transition j = t'-1 in [t, L-1). Reward and terminal flag are
/// recomputed under the new goal and the goal slice of state/next_state is
/// rewritten. Returns only the new transitions: k * (L - 1) of them.
std::vector<Transition> her_relabel(const std::vector<Transition>& episode, int k, const GoalSpec& goals,
                                    Rng& rng);

}  // namespace cgr
