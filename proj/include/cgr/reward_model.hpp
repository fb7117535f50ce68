#pragma once

#include <vector>

#include "cgr/agents.hpp"
#include "cgr/buffers.hpp"
#include "cgr/nn.hpp"

namespace cgr {

/// Learning and target reward models. Both map state ++ encoded action to a
/// scalar Gaussian over the reward. The target only changes through
/// sync_target(), which the trainer calls at episode boundaries.
class RewardModelPair {
 public:
  RewardModelPair(int state_width, const ActionSpace& actions, const NetworkShape& shape, Rng& init_rng);

  int input_width() const { return learning_.input_width(); }
  Vector encode(const Vector& state, const Action& action) const;

  /// Target model's prediction; its mean is the imputed reward.
  nn::GaussianHead predict(const Vector& state, const Action& action) const;
  nn::GaussianHead predict_learning(const Vector& state, const Action& action) const;

  /// Mean Gaussian NLL of the batch rewards under the learning model.
  LossAndGradients nll_loss(const std::vector<Transition>& batch) const;
  /// One Adamax step on nll_loss; returns the pre-step loss.
  double train(const std::vector<Transition>& batch, double learning_rate);

  /// Hard copy learning -> target.
  void sync_target();

  /// Fills absent rewards with the target model's mean; present rewards and
  /// every other field are left as they are. With `sample_rng` set, absent
  /// rewards are drawn from the target Gaussian instead of taking its mean.
  /// Returns the substitution count.
  std::size_t impute(std::vector<Transition>& batch, Rng* sample_rng = nullptr) const;

  const nn::Network& learning() const { return learning_; }
  const nn::Network& target() const { return target_; }
  nn::Network& mutable_learning() { return learning_; }

 private:
  Matrix encode_batch(const std::vector<Transition>& batch) const;

  ActionSpace actions_;
  int state_width_;
  nn::Network learning_;
  nn::Network target_;
};

}  // namespace cgr
