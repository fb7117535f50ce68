#pragma once

#include <vector>

#include "cgr/env.hpp"

namespace cgr {

struct BitFlipState {
  std::vector<bool> bits;
  std::vector<bool> goal;
};

/// n-bit flipping task. State features are the current bits followed by the
/// goal bits; action i toggles bit i. Reward 0 on reaching the goal, -1
/// otherwise; episodes are truncated after n + 5 steps.
class BitFlipEnv final : public Environment, public GoalSpec {
 public:
  explicit BitFlipEnv(int bits);

  std::string name() const override { return "bitflip"; }
  int state_width() const override { return 2 * bits_; }
  ActionSpace action_space() const override { return {ActionKind::discrete, bits_}; }
  int max_steps() const override { return bits_ + 5; }
  ScoreReference score_reference() const override;
  const GoalSpec* goal_spec() const override { return this; }
  Vector achieved_goal() const override;

  int goal_width() const override { return bits_; }
  double compute_reward(const Vector& achieved, const Vector& goal) const override;
  bool goal_reached(const Vector& achieved, const Vector& goal) const override;

  const BitFlipState& state() const { return state_; }
  /// Replaces bits and goal mid-episode.
  void set_state(BitFlipState state);
  Vector features() const;

 protected:
  Vector do_reset(std::uint64_t seed) override;
  Outcome do_step(const Action& action) override;

 private:
  int bits_;
  BitFlipState state_;
  int initial_distance_ = 1;
};

}  // namespace cgr
