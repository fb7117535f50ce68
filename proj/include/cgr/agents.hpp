#pragma once

#include <vector>

#include "cgr/buffers.hpp"
#include "cgr/nn.hpp"

namespace cgr {

struct NetworkShape {
  int hidden_width = 64;
  int hidden_layers = 2;

  std::vector<int> widths(int in, int out) const;
};

struct EpsilonSchedule {
  double initial = 1.0;
  double decay = 0.995;
  double minimum = 0.01;
};

/// Loss value together with the parameter gradient that produced it.
struct LossAndGradients {
  double loss = 0.0;
  nn::Gradients gradients;
};

/// Deep Q-network with a learned network and a target network.
class DqnAgent {
 public:
  DqnAgent(int state_width, int action_count, const NetworkShape& shape, const EpsilonSchedule& schedule,
           Rng& init_rng);

  int action_count() const { return action_count_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double eps);

  Vector q_values(const Vector& state) const;
  /// Epsilon-greedy: uniform random action with probability epsilon, else
  /// argmax of Q with ties going to the lowest index.
  int select_action(const Vector& state, Rng& rng) const;
  /// Same rule applied to precomputed Q-values.
  int select_from_q(const Vector& q, Rng& rng) const;
  static int greedy_action(const Vector& q);

  /// Mean squared TD error over the batch and its gradient w.r.t. the
  /// learned network. Every reward must be present.
  LossAndGradients td_loss(const std::vector<Transition>& batch, double discount) const;
  /// One Adamax step on td_loss; returns the pre-step loss.
  double train_step(const std::vector<Transition>& batch, double discount, double learning_rate);

  /// target <- tau * target + (1 - tau) * learned.
  void sync_target(double tau);
  /// epsilon <- max(minimum, epsilon * decay).
  void decay_epsilon();

  const nn::Network& learned() const { return learned_; }
  const nn::Network& target() const { return target_; }
  nn::Network& mutable_learned() { return learned_; }
  nn::Network& mutable_target() { return target_; }

 private:
  int action_count_;
  EpsilonSchedule schedule_;
  double epsilon_;
  nn::Network learned_;
  nn::Network target_;
};

struct SampledAction {
  Vector action;       // clipped to [-1, 1]
  double log_density;  // of the unclipped sample
};

struct ActorCriticLosses {
  double actor = 0.0;
  double critic = 0.0;
};

/// Gaussian-policy actor with a state-value critic and a target critic.
class ActorCriticAgent {
 public:
  ActorCriticAgent(int state_width, int action_dims, const NetworkShape& shape, Rng& init_rng);

  int action_dims() const { return action_dims_; }

  nn::GaussianHead policy(const Vector& state) const;
  double value(const Vector& state) const;
  SampledAction select_action(const Vector& state, Rng& rng) const;
  static SampledAction sample_from(const nn::GaussianHead& head, Rng& rng);

  /// Critic regression target r + discount * V_target(s') * (1 - terminal)
  /// minus V(s), per transition.
  Vector advantages(const std::vector<Transition>& batch, double discount) const;
  /// Mean of -log pi(a|s) * advantage with the advantage held constant.
  LossAndGradients actor_loss(const std::vector<Transition>& batch, const Vector& advantage) const;
  /// Mean squared error of V(s) against the bootstrapped target.
  LossAndGradients critic_loss(const std::vector<Transition>& batch, double discount) const;
  ActorCriticLosses train_step(const std::vector<Transition>& batch, double discount, double learning_rate);

  void sync_target(double tau);

  const nn::Network& actor() const { return actor_; }
  const nn::Network& critic() const { return critic_; }
  const nn::Network& target_critic() const { return target_critic_; }
  nn::Network& mutable_actor() { return actor_; }
  nn::Network& mutable_critic() { return critic_; }

 private:
  int action_dims_;
  nn::Network actor_;
  nn::Network critic_;
  nn::Network target_critic_;
};

/// Stacks the given state vectors as matrix columns.
Matrix stack_states(const std::vector<Transition>& batch, bool next);

}  // namespace cgr
