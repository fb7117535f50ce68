#include "cgr/bitflip.hpp"

namespace cgr {

BitFlipEnv::BitFlipEnv(int bits) : bits_(bits) {
  if (bits < 1 || bits > 64) throw ContractError("bitflip: bit count must lie in [1, 64]");
  state_.bits.assign(static_cast<std::size_t>(bits), false);
  state_.goal.assign(static_cast<std::size_t>(bits), false);
}

Vector BitFlipEnv::do_reset(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x62697473ULL));
  do {
    for (int i = 0; i < bits_; ++i) {
      state_.bits[static_cast<std::size_t>(i)] = uniform01(rng) < 0.5;
      state_.goal[static_cast<std::size_t>(i)] = uniform01(rng) < 0.5;
    }
  } while (state_.bits == state_.goal);
  initial_distance_ = 0;
  for (int i = 0; i < bits_; ++i)
    initial_distance_ += state_.bits[static_cast<std::size_t>(i)] != state_.goal[static_cast<std::size_t>(i)];
  return features();
}

Environment::Outcome BitFlipEnv::do_step(const Action& action) {
  const int* index = std::get_if<int>(&action);
  if (!index || *index < 0 || *index >= bits_) throw ContractError("bitflip: flip index out of range");
  state_.bits[static_cast<std::size_t>(*index)] = !state_.bits[static_cast<std::size_t>(*index)];
  Outcome out;
  out.terminal = state_.bits == state_.goal;
  out.success = out.terminal;
  out.reward = out.terminal ? 0.0 : -1.0;
  out.next_state = features();
  return out;
}

void BitFlipEnv::set_state(BitFlipState state) {
  if (state.bits.size() != static_cast<std::size_t>(bits_) || state.goal.size() != state.bits.size())
    throw DimensionError("bitflip: state width mismatch");
  state_ = std::move(state);
}

Vector BitFlipEnv::features() const {
  Vector f(2 * bits_);
  for (int i = 0; i < bits_; ++i) {
    f(i) = state_.bits[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    f(bits_ + i) = state_.goal[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  return f;
}

Vector BitFlipEnv::achieved_goal() const { return features().head(bits_); }

double BitFlipEnv::compute_reward(const Vector& achieved, const Vector& goal) const {
  return goal_reached(achieved, goal) ? 0.0 : -1.0;
}

bool BitFlipEnv::goal_reached(const Vector& achieved, const Vector& goal) const {
  if (achieved.size() != bits_ || goal.size() != bits_) throw DimensionError("bitflip: goal width mismatch");
  return achieved == goal;
}

ScoreReference BitFlipEnv::score_reference() const {
  return {-static_cast<double>(initial_distance_ - 1), -static_cast<double>(max_steps())};
}

}  // namespace cgr
