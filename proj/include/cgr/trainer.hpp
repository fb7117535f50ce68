#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cgr/agents.hpp"
#include "cgr/buffers.hpp"
#include "cgr/confidence.hpp"
#include "cgr/config.hpp"
#include "cgr/env.hpp"
#include "cgr/reward_model.hpp"

namespace cgr {

/// Fires after `required` qualifying episodes. An episode qualifies when its
/// score is within `fraction` of the best possible score: score >= (1 -
/// fraction) * optimum for positive optima, otherwise score >= optimum -
/// fraction * (optimum - baseline). Qualifying episodes need not be
/// consecutive.
class ConvergenceDetector {
 public:
  explicit ConvergenceDetector(double fraction = 0.05, int required = 5);

  static double threshold(const ScoreReference& ref, double fraction);
  bool qualifies(double score, const ScoreReference& ref) const;

  /// Records one episode; returns true once converged.
  bool observe(double score, const ScoreReference& ref, std::uint64_t cumulative_requests);

  bool converged() const { return converged_; }
  int qualifying_count() const { return static_cast<int>(scores_.size()); }
  /// Mean of the qualifying scores (the first `required` once converged).
  double average_score() const;
  std::uint64_t requests_at_convergence() const { return requests_at_convergence_; }

 private:
  double fraction_;
  int required_;
  std::vector<double> scores_;
  bool converged_ = false;
  std::uint64_t requests_at_convergence_ = 0;
};

/// Forces the gate decision regardless of confidence.
enum class GateOverride { none, always_request, never_request };

/// Operations of one training step and episode end, in execution order.
enum class TraceEvent {
  select_action,
  compute_confidence,
  env_step,
  gate,
  redeem_reward,
  store_feedback,
  store_replay,
  reward_model_update,
  sample_replay,
  impute,
  agent_update,
  advance_state,
  sync_reward_target,
  sync_agent_target,
  decay_epsilon,
};

std::string to_string(TraceEvent e);

struct StepRecord {
  int episode = 0;
  int step = 0;
  std::string action;
  ConfidenceReport confidence;
  /// Environment reward when requested, else the target model's mean.
  double reward_or_imputed = 0.0;
  /// "env" or "imputed".
  std::string source;
};

struct EpisodeMetrics {
  int episode = 0;
  double episode_return = 0.0;
  int steps = 0;
  std::uint64_t requests = 0;
  std::uint64_t cumulative_requests = 0;
  bool success = false;
  ScoreReference reference;
};

struct ConvergenceSummary {
  bool converged = false;
  int episode = -1;
  double average_score = 0.0;
  std::uint64_t rewards_to_converge = 0;
};

struct RunResult {
  std::vector<EpisodeMetrics> episodes;
  ConvergenceSummary convergence;
  /// Mean of the five highest episode returns; the run's score when it did
  /// not converge.
  double best_five_average = 0.0;
  std::uint64_t total_requests = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t agent_updates = 0;
  std::uint64_t reward_model_updates = 0;

  /// Average of the first five qualifying episodes if converged, else the
  /// best-five average.
  double highest_score() const {
    return convergence.converged ? convergence.average_score : best_five_average;
  }
};

struct TrainerHooks {
  std::function<void(TraceEvent)> on_trace;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpisodeMetrics&)> on_episode;
  /// Scripted episodes: when set, the returned action replaces the agent's
  /// choice. The agent still evaluates the state, so confidence is unchanged.
  std::function<Action(const Vector& state, int step)> script;
};

/// State of one training run: the agent, reward models, both buffers, the
/// environment and the gate. Executes the training loop one episode at a
/// time.
class Trainer {
 public:
  Trainer(const ExperimentConfig& config, std::uint64_t seed, TrainerHooks hooks = {},
          GateOverride override_gate = GateOverride::none);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  EpisodeMetrics run_episode();
  /// Runs episodes until convergence or the episode cap.
  RunResult train();

  const ExperimentConfig& config() const { return config_; }
  Environment& environment() { return *env_; }
  const RingBuffer& replay_buffer() const { return replay_; }
  const RingBuffer& feedback_buffer() const { return feedback_; }
  DqnAgent* dqn() { return dqn_.get(); }
  ActorCriticAgent* actor_critic() { return ac_.get(); }
  RewardModelPair* reward_model() { return reward_model_.get(); }
  const ConfidenceGate& gate() const { return gate_; }
  int episode_index() const { return episode_; }
  std::uint64_t reward_requests() const;
  std::uint64_t agent_updates() const { return agent_updates_; }
  std::uint64_t reward_model_updates() const { return reward_model_updates_; }
  std::uint64_t reward_entropy_queries() const { return reward_entropy_queries_; }
  std::uint64_t total_steps() const { return total_steps_; }

 private:
  void trace(TraceEvent e) const;
  bool uses_reward_model() const { return reward_model_ != nullptr; }

  ExperimentConfig config_;
  std::uint64_t seed_;
  TrainerHooks hooks_;
  GateOverride override_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<DqnAgent> dqn_;
  std::unique_ptr<ActorCriticAgent> ac_;
  std::unique_ptr<RewardModelPair> reward_model_;
  RingBuffer replay_;
  RingBuffer feedback_;
  ConfidenceGate gate_;
  Rng explore_rng_;
  Rng sample_rng_;
  Rng gate_rng_;
  Rng her_rng_;
  Rng impute_rng_;
  int episode_ = 0;
  std::uint64_t agent_updates_ = 0;
  std::uint64_t reward_model_updates_ = 0;
  std::uint64_t reward_entropy_queries_ = 0;
  std::uint64_t total_steps_ = 0;
};

/// Convenience wrapper: builds a trainer and runs it to completion.
RunResult train(const ExperimentConfig& config, std::uint64_t seed, TrainerHooks hooks = {});

}  // namespace cgr
