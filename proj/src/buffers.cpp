#include "cgr/buffers.hpp"

namespace cgr {

RingBuffer::RingBuffer(std::size_t capacity, bool require_reward)
    : capacity_(capacity), require_reward_(require_reward) {
  if (capacity == 0) throw ContractError("buffer capacity must be positive");
}

void RingBuffer::push(Transition t) {
  if (require_reward_ && !t.reward) throw ContractError("feedback buffer only accepts rewarded transitions");
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& RingBuffer::operator[](std::size_t i) const {
  if (i >= items_.size()) throw ContractError("buffer index out of range");
  return items_[(cursor_ + i) % items_.size()];
}

std::vector<Transition> sample_minibatch(const RingBuffer& buffer, std::size_t batch_size, Rng& rng) {
  if (buffer.empty()) throw ContractError("cannot sample from an empty buffer");
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(buffer[uniform_index(rng, buffer.size())]);
  return batch;
}

std::vector<Transition> her_relabel(const std::vector<Transition>& episode, int k, const GoalSpec& goals,
                                    Rng& rng) {
  if (k < 0) throw ContractError("her: k must be non-negative");
  const int width = goals.goal_width();
  for (const auto& t : episode) {
    if (!t.goal || !t.achieved) throw ContractError("her: every transition needs a goal and an achieved goal");
    if (t.goal->size() != width || t.achieved->size() != width) throw DimensionError("her: goal width mismatch");
  }
  std::vector<Transition> out;
  const std::size_t length = episode.size();
  if (length < 2 || k == 0) return out;
  out.reserve(static_cast<std::size_t>(k) * (length - 1));
  for (std::size_t t = 0; t + 1 < length; ++t) {
    for (int j = 0; j < k; ++j) {
      // Future step t' in (t, length); its state is transition t'-1's next state.
      const std::size_t future = t + 1 + uniform_index(rng, length - t - 1);
      const Vector& new_goal = *episode[future - 1].achieved;
      Transition r = episode[t];
      r.goal = new_goal;
      r.state.tail(width) = new_goal;
      r.next_state.tail(width) = new_goal;
      r.reward = goals.compute_reward(*r.achieved, new_goal);
      r.terminal = goals.goal_reached(*r.achieved, new_goal);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace cgr
