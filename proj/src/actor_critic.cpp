#include <algorithm>

#include "cgr/agents.hpp"

namespace cgr {

ActorCriticAgent::ActorCriticAgent(int state_width, int action_dims, const NetworkShape& shape, Rng& init_rng)
    : action_dims_(action_dims) {
  if (action_dims < 1) throw ConfigError("actor-critic: need at least one action dimension");
  actor_ = nn::Network(shape.widths(state_width, 2 * action_dims), nn::Activation::relu,
                       nn::Activation::identity, init_rng);
  critic_ = nn::Network(shape.widths(state_width, 1), nn::Activation::relu, nn::Activation::identity, init_rng);
  target_critic_ = critic_;
}

nn::GaussianHead ActorCriticAgent::policy(const Vector& state) const {
  return nn::gaussian_head_from_output(actor_.forward(state));
}

double ActorCriticAgent::value(const Vector& state) const { return critic_.forward(state)(0); }

SampledAction ActorCriticAgent::select_action(const Vector& state, Rng& rng) const {
  return sample_from(policy(state), rng);
}

SampledAction ActorCriticAgent::sample_from(const nn::GaussianHead& head, Rng& rng) {
  const auto dims = head.mean.size();
  Vector raw(dims);
  for (Eigen::Index i = 0; i < dims; ++i) raw(i) = head.mean(i) + head.stddev(i) * standard_normal(rng);
  SampledAction out;
  out.log_density = nn::gaussian_log_density(head, raw);
  out.action = raw.cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

namespace {

const Vector& continuous_action(const Transition& t, int dims) {
  const Vector* a = std::get_if<Vector>(&t.action);
  if (!a || a->size() != dims) throw ContractError("actor-critic: invalid action in batch");
  return *a;
}

}  // namespace

Vector ActorCriticAgent::advantages(const std::vector<Transition>& batch, double discount) const {
  const Matrix v = critic_.forward(stack_states(batch, false));
  const Matrix v_next = target_critic_.forward(stack_states(batch, true));
  Vector adv(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    if (!t.reward) throw ContractError("actor-critic: transition without reward in training batch");
    const auto col = static_cast<Eigen::Index>(i);
    adv(col) = *t.reward + (t.terminal ? 0.0 : discount * v_next(0, col)) - v(0, col);
  }
  return adv;
}

LossAndGradients ActorCriticAgent::actor_loss(const std::vector<Transition>& batch, const Vector& advantage) const {
  if (advantage.size() != static_cast<Eigen::Index>(batch.size()))
    throw DimensionError("actor loss: advantage width mismatch");
  nn::Tape tape;
  const Matrix raw = actor_.forward(stack_states(batch, false), tape);
  const auto n = static_cast<double>(batch.size());
  Matrix upstream(raw.rows(), raw.cols());
  LossAndGradients out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector raw_col = raw.col(col);
    const auto head = nn::gaussian_head_from_output(raw_col);
    const Vector& a = continuous_action(batch[i], action_dims_);
    const double adv = advantage(col);
    out.loss += -nn::gaussian_log_density(head, a) * adv / n;
    // d(-log pi)/dmean and d(-log pi)/dsigma per dimension.
    const Vector diff = a - head.mean;
    const Vector var = head.stddev.array().square();
    const Vector g_mean = -(diff.array() / var.array()) * adv / n;
    const Vector g_std =
        (head.stddev.array().inverse() - diff.array().square() / (var.array() * head.stddev.array())) * adv / n;
    upstream.col(col) = nn::gaussian_head_raw_gradient(raw_col, g_mean, g_std);
  }
  out.gradients = actor_.backward(tape, upstream);
  return out;
}

LossAndGradients ActorCriticAgent::critic_loss(const std::vector<Transition>& batch, double discount) const {
  nn::Tape tape;
  const Matrix v = critic_.forward(stack_states(batch, false), tape);
  const Matrix v_next = target_critic_.forward(stack_states(batch, true));
  const auto n = static_cast<double>(batch.size());
  Matrix upstream(1, v.cols());
  LossAndGradients out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    if (!t.reward) throw ContractError("actor-critic: transition without reward in training batch");
    const auto col = static_cast<Eigen::Index>(i);
    const double target = *t.reward + (t.terminal ? 0.0 : discount * v_next(0, col));
    const double err = v(0, col) - target;
    out.loss += err * err / n;
    upstream(0, col) = 2.0 * err / n;
  }
  out.gradients = critic_.backward(tape, upstream);
  return out;
}

ActorCriticLosses ActorCriticAgent::train_step(const std::vector<Transition>& batch, double discount,
                                               double learning_rate) {
  const Vector adv = advantages(batch, discount);
  auto critic = critic_loss(batch, discount);
  auto actor = actor_loss(batch, adv);
  critic_.adamax_step(critic.gradients, learning_rate);
  actor_.adamax_step(actor.gradients, learning_rate);
  return {actor.loss, critic.loss};
}

void ActorCriticAgent::sync_target(double tau) { target_critic_.blend_from(critic_, tau); }

}  // namespace cgr
