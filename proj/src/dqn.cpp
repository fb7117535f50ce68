#include <algorithm>

#include "cgr/agents.hpp"

namespace cgr {

std::vector<int> NetworkShape::widths(int in, int out) const {
  if (hidden_layers < 0 || hidden_width <= 0) throw ConfigError("invalid network shape");
  std::vector<int> w;
  w.push_back(in);
  for (int i = 0; i < hidden_layers; ++i) w.push_back(hidden_width);
  w.push_back(out);
  return w;
}

Matrix stack_states(const std::vector<Transition>& batch, bool next) {
  if (batch.empty()) throw ContractError("empty minibatch");
  const Eigen::Index width = next ? batch.front().next_state.size() : batch.front().state.size();
  Matrix m(width, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vector& v = next ? batch[i].next_state : batch[i].state;
    if (v.size() != width) throw DimensionError("minibatch states have different widths");
    m.col(static_cast<Eigen::Index>(i)) = v;
  }
  return m;
}

DqnAgent::DqnAgent(int state_width, int action_count, const NetworkShape& shape,
                   const EpsilonSchedule& schedule, Rng& init_rng)
    : action_count_(action_count), schedule_(schedule), epsilon_(schedule.initial) {
  if (action_count < 1) throw ConfigError("dqn: need at least one action");
  if (schedule.minimum < 0.0 || schedule.minimum > 1.0 || schedule.initial < schedule.minimum ||
      schedule.initial > 1.0 || schedule.decay <= 0.0 || schedule.decay > 1.0)
    throw ConfigError("dqn: invalid epsilon schedule");
  const auto widths = shape.widths(state_width, action_count);
  learned_ = nn::Network(widths, nn::Activation::relu, nn::Activation::identity, init_rng);
  target_ = learned_;
}

void DqnAgent::set_epsilon(double eps) {
  if (eps < 0.0 || eps > 1.0) throw ContractError("epsilon must lie in [0, 1]");
  epsilon_ = eps;
}

Vector DqnAgent::q_values(const Vector& state) const { return learned_.forward(state); }

int DqnAgent::greedy_action(const Vector& q) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i)
    if (q(i) > q(best)) best = i;
  return static_cast<int>(best);
}

int DqnAgent::select_action(const Vector& state, Rng& rng) const { return select_from_q(q_values(state), rng); }

int DqnAgent::select_from_q(const Vector& q, Rng& rng) const {
  if (q.size() != action_count_) throw DimensionError("dqn: Q-value width mismatch");
  // The exploration draw is consumed every step so the random stream does
  // not depend on the greedy outcome.
  const double u = uniform01(rng);
  const auto random_action = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(action_count_)));
  return u < epsilon_ ? random_action : greedy_action(q);
}

LossAndGradients DqnAgent::td_loss(const std::vector<Transition>& batch, double discount) const {
  const Matrix states = stack_states(batch, false);
  const Matrix next_states = stack_states(batch, true);
  const Matrix next_q = target_.forward(next_states);
  nn::Tape tape;
  const Matrix q = learned_.forward(states, tape);
  const auto n = static_cast<double>(batch.size());
  Matrix upstream = Matrix::Zero(q.rows(), q.cols());
  LossAndGradients out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    if (!t.reward) throw ContractError("dqn: transition without reward in training batch");
    const int* a = std::get_if<int>(&t.action);
    if (!a || *a < 0 || *a >= action_count_) throw ContractError("dqn: invalid action in batch");
    const auto col = static_cast<Eigen::Index>(i);
    const double bootstrap = t.terminal ? 0.0 : next_q.col(col).maxCoeff();
    const double target = *t.reward + discount * bootstrap;
    const double err = q(*a, col) - target;
    out.loss += err * err / n;
    upstream(*a, col) = 2.0 * err / n;
  }
  out.gradients = learned_.backward(tape, upstream);
  return out;
}

double DqnAgent::train_step(const std::vector<Transition>& batch, double discount, double learning_rate) {
  auto result = td_loss(batch, discount);
  learned_.adamax_step(result.gradients, learning_rate);
  return result.loss;
}

void DqnAgent::sync_target(double tau) { target_.blend_from(learned_, tau); }

void DqnAgent::decay_epsilon() { epsilon_ = std::max(schedule_.minimum, epsilon_ * schedule_.decay); }

}  // namespace cgr
