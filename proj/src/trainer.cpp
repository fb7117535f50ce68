#include "cgr/trainer.hpp"

#include <algorithm>
#include <functional>

namespace cgr {

ConvergenceDetector::ConvergenceDetector(double fraction, int required) : fraction_(fraction), required_(required) {
  if (fraction < 0.0 || required < 1) throw ContractError("convergence detector: invalid parameters");
}

double ConvergenceDetector::threshold(const ScoreReference& ref, double fraction) {
  if (ref.optimum > 0.0) return (1.0 - fraction) * ref.optimum;
  return ref.optimum - fraction * (ref.optimum - ref.baseline);
}

bool ConvergenceDetector::qualifies(double score, const ScoreReference& ref) const {
  return score >= threshold(ref, fraction_);
}

bool ConvergenceDetector::observe(double score, const ScoreReference& ref, std::uint64_t cumulative_requests) {
  if (converged_) return true;
  if (qualifies(score, ref)) {
    scores_.push_back(score);
    if (static_cast<int>(scores_.size()) >= required_) {
      converged_ = true;
      requests_at_convergence_ = cumulative_requests;
    }
  }
  return converged_;
}

double ConvergenceDetector::average_score() const {
  if (scores_.empty()) return 0.0;
  double sum = 0.0;
  for (double s : scores_) sum += s;
  return sum / static_cast<double>(scores_.size());
}

std::string to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::select_action: return "select_action";
    case TraceEvent::compute_confidence: return "compute_confidence";
    case TraceEvent::env_step: return "env_step";
    case TraceEvent::gate: return "gate";
    case TraceEvent::redeem_reward: return "redeem_reward";
    case TraceEvent::store_feedback: return "store_feedback";
    case TraceEvent::store_replay: return "store_replay";
    case TraceEvent::reward_model_update: return "reward_model_update";
    case TraceEvent::sample_replay: return "sample_replay";
    case TraceEvent::impute: return "impute";
    case TraceEvent::agent_update: return "agent_update";
    case TraceEvent::advance_state: return "advance_state";
    case TraceEvent::sync_reward_target: return "sync_reward_target";
    case TraceEvent::sync_agent_target: return "sync_agent_target";
    case TraceEvent::decay_epsilon: return "decay_epsilon";
  }
  return "unknown";
}

namespace {

// Stream tags for the per-run random sources.
enum : std::uint64_t {
  kInitStream = 1,
  kExploreStream,
  kSampleStream,
  kGateStream,
  kHerStream,
  kImputeStream,
  kEpisodeStreamBase = 1000,
};

std::string action_text(const Action& a) {
  if (const int* i = std::get_if<int>(&a)) return std::to_string(*i);
  const Vector& v = std::get<Vector>(a);
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out.push_back(';');
    out += format_number(v(i));
  }
  return out;
}

}  // namespace

Trainer::Trainer(const ExperimentConfig& config, std::uint64_t seed, TrainerHooks hooks, GateOverride override_gate)
    : config_(config),
      seed_(seed),
      hooks_(std::move(hooks)),
      override_(override_gate),
      replay_(make_replay_buffer(config.buffer_size)),
      feedback_(make_feedback_buffer(config.buffer_size)),
      gate_(config.gate_config()),
      explore_rng_(derive_seed(seed, kExploreStream)),
      sample_rng_(derive_seed(seed, kSampleStream)),
      gate_rng_(derive_seed(seed, kGateStream)),
      her_rng_(derive_seed(seed, kHerStream)),
      impute_rng_(derive_seed(seed, kImputeStream)) {
  config_.validate();
  env_ = make_environment(config_.env_spec());
  Rng init(derive_seed(seed, kInitStream));
  const ActionSpace space = env_->action_space();
  const NetworkShape agent_shape{config_.hidden_width, config_.hidden_layers};
  if (config_.agent == AgentKind::dqn) {
    if (space.kind != ActionKind::discrete) throw ConfigError("dqn needs a discrete action space");
    dqn_ = std::make_unique<DqnAgent>(env_->state_width(), space.size, agent_shape,
                                      EpsilonSchedule{config_.epsilon, config_.epsilon_decay, config_.epsilon_min},
                                      init);
  } else {
    if (space.kind != ActionKind::continuous) throw ConfigError("a2c needs a continuous action space");
    ac_ = std::make_unique<ActorCriticAgent>(env_->state_width(), space.size, agent_shape, init);
  }
  // Baselines never impute, so they carry no reward model at all.
  if (config_.entropy != EntropyMode::off) {
    reward_model_ = std::make_unique<RewardModelPair>(
        env_->state_width(), space, NetworkShape{config_.reward_hidden_width, config_.hidden_layers}, init);
  }
  if (override_ == GateOverride::never_request && !reward_model_)
    throw ConfigError("skipping rewards needs a reward model to impute them");
  if (config_.her && !env_->goal_spec()) throw ConfigError("her needs a goal-conditioned environment");
}

Trainer::~Trainer() = default;

std::uint64_t Trainer::reward_requests() const { return env_->reward_requests(); }

void Trainer::trace(TraceEvent e) const {
  if (hooks_.on_trace) hooks_.on_trace(e);
}

EpisodeMetrics Trainer::run_episode() {
  const std::uint64_t requests_before = env_->reward_requests();
  Vector state = env_->reset(derive_seed(seed_, kEpisodeStreamBase + static_cast<std::uint64_t>(episode_)));
  const ScoreReference reference = env_->score_reference();
  const GoalSpec* goals = env_->goal_spec();
  std::vector<Transition> episode_log;
  std::optional<bool> forced;
  if (override_ == GateOverride::always_request) forced = true;
  if (override_ == GateOverride::never_request) forced = false;

  int step = 0;
  while (!env_->episode_done()) {
    trace(TraceEvent::select_action);
    Action action;
    ActionEntropy entropy;
    if (dqn_) {
      const Vector q = dqn_->q_values(state);
      action = dqn_->select_from_q(q, explore_rng_);
      if (hooks_.script) action = hooks_.script(state, step);
      if (config_.entropy == EntropyMode::action || config_.entropy == EntropyMode::action_reward) {
        entropy.bits = discrete_action_entropy_bits(q);
        entropy.normalized = discrete_action_entropy(q);
      }
    } else {
      const nn::GaussianHead head = ac_->policy(state);
      action = ActorCriticAgent::sample_from(head, explore_rng_).action;
      if (hooks_.script) action = hooks_.script(state, step);
      if (config_.entropy == EntropyMode::action || config_.entropy == EntropyMode::action_reward) {
        entropy.bits = gaussian_differential_entropy_bits(head);
        entropy.normalized = gaussian_differential_entropy(head);
      }
    }

    trace(TraceEvent::compute_confidence);
    std::optional<nn::GaussianHead> reward_head;
    if (gate_.needs_reward_model()) {
      reward_head = reward_model_->predict(state, action);
      ++reward_entropy_queries_;
    }

    trace(TraceEvent::env_step);
    EnvStep result = env_->step(action);

    trace(TraceEvent::gate);
    const ConfidenceReport report =
        gate_.decide(entropy, reward_head ? &*reward_head : nullptr, gate_rng_, forced);

    Transition t;
    t.state = state;
    t.action = action;
    t.terminal = result.terminal;
    t.next_state = result.next_state;
    if (goals) {
      t.goal = Vector(state.tail(goals->goal_width()));
      t.achieved = env_->achieved_goal();
    }
    if (report.request) {
      trace(TraceEvent::redeem_reward);
      t.reward = env_->redeem(result.reward);
      trace(TraceEvent::store_feedback);
      // Without a reward model nothing ever reads the feedback buffer.
      if (reward_model_) feedback_.push(t);
    }

    if (hooks_.on_step) {
      StepRecord rec;
      rec.episode = episode_;
      rec.step = step;
      rec.action = action_text(action);
      rec.confidence = report;
      if (t.reward) {
        rec.reward_or_imputed = *t.reward;
        rec.source = "env";
      } else {
        rec.reward_or_imputed = reward_model_->predict(state, action).mean(0);
        rec.source = "imputed";
      }
      hooks_.on_step(rec);
    }

    trace(TraceEvent::store_replay);
    replay_.push(t);
    if (goals) episode_log.push_back(std::move(t));

    if (reward_model_ && feedback_.size() >= config_.batch_size) {
      trace(TraceEvent::reward_model_update);
      const auto fb_batch = sample_minibatch(feedback_, config_.batch_size, sample_rng_);
      reward_model_->train(fb_batch, config_.learning_rate);
      ++reward_model_updates_;
    }

    trace(TraceEvent::sample_replay);
    auto batch = sample_minibatch(replay_, config_.batch_size, sample_rng_);
    if (reward_model_) {
      trace(TraceEvent::impute);
      reward_model_->impute(batch, config_.impute_sample ? &impute_rng_ : nullptr);
    }
    trace(TraceEvent::agent_update);
    if (dqn_)
      dqn_->train_step(batch, config_.discount, config_.learning_rate);
    else
      ac_->train_step(batch, config_.discount, config_.learning_rate);
    ++agent_updates_;

    trace(TraceEvent::advance_state);
    state = std::move(result.next_state);
    ++step;
    ++total_steps_;
  }

  if (config_.her && goals && !episode_log.empty()) {
    for (auto& r : her_relabel(episode_log, config_.her_k, *goals, her_rng_)) {
      if (reward_model_ && config_.her_to_feedback) feedback_.push(r);
      replay_.push(std::move(r));
    }
  }

  if (reward_model_) {
    trace(TraceEvent::sync_reward_target);
    reward_model_->sync_target();
  }
  trace(TraceEvent::sync_agent_target);
  const double tau = config_.target_sync == TargetSync::hard ? 0.0 : config_.tau;
  if (dqn_)
    dqn_->sync_target(tau);
  else
    ac_->sync_target(tau);
  if (dqn_) {
    trace(TraceEvent::decay_epsilon);
    dqn_->decay_epsilon();
  }

  EpisodeMetrics m;
  m.episode = episode_;
  m.episode_return = env_->episode_return();
  m.steps = env_->steps_taken();
  m.requests = env_->reward_requests() - requests_before;
  m.cumulative_requests = env_->reward_requests();
  m.success = env_->episode_success();
  m.reference = reference;
  ++episode_;
  if (hooks_.on_episode) hooks_.on_episode(m);
  return m;
}

RunResult Trainer::train() {
  RunResult out;
  ConvergenceDetector detector;
  const int cap = config_.resolved_episode_cap();
  while (episode_ < cap && !detector.converged()) {
    EpisodeMetrics m = run_episode();
    if (detector.observe(m.episode_return, m.reference, m.cumulative_requests)) {
      out.convergence.converged = true;
      out.convergence.episode = m.episode;
      out.convergence.average_score = detector.average_score();
      out.convergence.rewards_to_converge = detector.requests_at_convergence();
    }
    out.episodes.push_back(m);
  }
  std::vector<double> returns;
  returns.reserve(out.episodes.size());
  for (const auto& m : out.episodes) returns.push_back(m.episode_return);
  const std::size_t top = std::min<std::size_t>(5, returns.size());
  std::partial_sort(returns.begin(), returns.begin() + static_cast<std::ptrdiff_t>(top), returns.end(),
                    std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < top; ++i) sum += returns[i];
  out.best_five_average = top ? sum / static_cast<double>(top) : 0.0;
  out.total_requests = env_->reward_requests();
  out.total_steps = total_steps_;
  out.agent_updates = agent_updates_;
  out.reward_model_updates = reward_model_updates_;
  return out;
}

RunResult train(const ExperimentConfig& config, std::uint64_t seed, TrainerHooks hooks) {
  Trainer trainer(config, seed, std::move(hooks));
  return trainer.train();
}

}  // namespace cgr
