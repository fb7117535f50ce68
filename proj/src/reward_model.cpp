#include "cgr/reward_model.hpp"

namespace cgr {

RewardModelPair::RewardModelPair(int state_width, const ActionSpace& actions, const NetworkShape& shape,
                                 Rng& init_rng)
    : actions_(actions), state_width_(state_width) {
  const auto widths = shape.widths(state_width + actions.encoded_width(), 2);
  learning_ = nn::Network(widths, nn::Activation::relu, nn::Activation::identity, init_rng);
  target_ = learning_;
}

Vector RewardModelPair::encode(const Vector& state, const Action& action) const {
  if (state.size() != state_width_) throw DimensionError("reward model: state width mismatch");
  Vector in(input_width());
  in << state, encode_action(actions_, action);
  return in;
}

Matrix RewardModelPair::encode_batch(const std::vector<Transition>& batch) const {
  Matrix m(input_width(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = encode(batch[i].state, batch[i].action);
  return m;
}

nn::GaussianHead RewardModelPair::predict(const Vector& state, const Action& action) const {
  return nn::gaussian_head_from_output(target_.forward(encode(state, action)));
}

nn::GaussianHead RewardModelPair::predict_learning(const Vector& state, const Action& action) const {
  return nn::gaussian_head_from_output(learning_.forward(encode(state, action)));
}

LossAndGradients RewardModelPair::nll_loss(const std::vector<Transition>& batch) const {
  if (batch.empty()) throw ContractError("reward model: empty batch");
  nn::Tape tape;
  const Matrix raw = learning_.forward(encode_batch(batch), tape);
  const auto n = static_cast<double>(batch.size());
  Matrix upstream(raw.rows(), raw.cols());
  LossAndGradients out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].reward) throw ContractError("reward model: transition without reward in training batch");
    const auto col = static_cast<Eigen::Index>(i);
    const Vector raw_col = raw.col(col);
    const auto head = nn::gaussian_head_from_output(raw_col);
    const auto nll = nn::gaussian_nll_loss(head, Vector::Constant(1, *batch[i].reward));
    out.loss += nll.value / n;
    upstream.col(col) = nn::gaussian_head_raw_gradient(raw_col, nll.grad_mean / n, nll.grad_stddev / n);
  }
  out.gradients = learning_.backward(tape, upstream);
  return out;
}

double RewardModelPair::train(const std::vector<Transition>& batch, double learning_rate) {
  auto result = nll_loss(batch);
  learning_.adamax_step(result.gradients, learning_rate);
  return result.loss;
}

void RewardModelPair::sync_target() { target_.copy_parameters_from(learning_); }

std::size_t RewardModelPair::impute(std::vector<Transition>& batch, Rng* sample_rng) const {
  std::size_t substituted = 0;
  for (auto& t : batch) {
    if (t.reward) continue;
    const auto head = predict(t.state, t.action);
    t.reward = sample_rng ? head.mean(0) + head.stddev(0) * standard_normal(*sample_rng) : head.mean(0);
    ++substituted;
  }
  return substituted;
}

}  // namespace cgr
