#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cgr/common.hpp"

namespace cgr {

/// Discrete action index or continuous action vector.
using Action = std::variant<int, Vector>;

enum class ActionKind { discrete, continuous };

struct ActionSpace {
  ActionKind kind = ActionKind::discrete;
  /// Number of actions (discrete) or action dimensions (continuous).
  int size = 0;

  /// Width of the action encoding fed to the reward model: one-hot for
  /// discrete spaces, the raw vector for continuous ones.
  int encoded_width() const { return size; }
};

/// Encodes an action for the reward model input.
Vector encode_action(const ActionSpace& space, const Action& action);

/// Handle to a reward fixed at step time. Redeemable exactly once through the
/// environment that issued it.
class RewardToken {
 public:
  RewardToken() = default;

 private:
  friend class Environment;
  RewardToken(std::uint64_t owner, std::uint64_t epoch, std::uint32_t index)
      : owner_(owner), epoch_(epoch), index_(index) {}
  std::uint64_t owner_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint32_t index_ = 0;
};

struct EnvStep {
  Vector next_state;
  bool terminal = false;
  bool truncated = false;
  RewardToken reward;
};

/// Reference scores used by the convergence detector for the current episode.
struct ScoreReference {
  /// Best achievable return.
  double optimum = 0.0;
  /// Return of an uninformed policy; only used when optimum <= 0.
  double baseline = 0.0;
};

/// Goal-conditioned structure needed by hindsight relabeling. The goal is
/// stored in the last `goal_width` entries of every state vector.
class GoalSpec {
 public:
  virtual ~GoalSpec() = default;
  virtual int goal_width() const = 0;
  virtual double compute_reward(const Vector& achieved, const Vector& goal) const = 0;
  virtual bool goal_reached(const Vector& achieved, const Vector& goal) const = 0;
};

/// An environment whose transitions are always observed but whose reward is
/// only revealed by redeeming the token returned from step().
class Environment {
 public:
  Environment();
  virtual ~Environment() = default;
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  /// Starts a new episode and returns the initial state features. Tokens from
  /// earlier episodes become unredeemable.
  Vector reset(std::uint64_t seed);
  EnvStep step(const Action& action);
  /// Returns the reward behind `token` and counts one reward request.
  double redeem(const RewardToken& token);

  std::uint64_t reward_requests() const { return requests_; }
  bool episode_done() const { return done_; }
  int steps_taken() const { return steps_; }

  /// True return of the current episode. Evaluation-only: learners must go
  /// through redeem() for any reward they train on.
  double episode_return() const { return episode_return_; }
  /// Whether the current episode ended by completing the task.
  bool episode_success() const { return success_; }

  virtual std::string name() const = 0;
  virtual int state_width() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual int max_steps() const = 0;
  virtual ScoreReference score_reference() const = 0;
  virtual const GoalSpec* goal_spec() const { return nullptr; }
  /// Achieved-goal vector of the current state (goal environments only).
  virtual Vector achieved_goal() const { return {}; }

 protected:
  struct Outcome {
    Vector next_state;
    double reward = 0.0;
    bool terminal = false;
    bool success = false;
  };
  virtual Vector do_reset(std::uint64_t seed) = 0;
  virtual Outcome do_step(const Action& action) = 0;

 private:
  std::uint64_t id_;
  std::uint64_t epoch_ = 0;
  std::vector<std::optional<double>> ledger_;
  std::uint64_t requests_ = 0;
  int steps_ = 0;
  bool done_ = true;
  double episode_return_ = 0.0;
  bool success_ = false;
};

struct EnvironmentSpec {
  /// One of keylock, keylock-small, parking, bitflip.
  std::string id = "keylock-small";
  std::uint64_t layout_seed = 0;
  /// Key-lock layout in the plain-text grid format; overrides generation.
  std::string layout_text;
  /// Bit count for bitflip.
  int bits = 8;
};

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec);

}  // namespace cgr
