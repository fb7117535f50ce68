#include "cgr/keylock.hpp"
#include "cgr/trainer.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cgr;

namespace {

ExperimentConfig fixture_config(EntropyMode entropy, RegularizerMode reg, int cap) {
  ExperimentConfig cfg;
  cfg.env = "keylock-small";
  cfg.layout_text = testing::read_fixture("keylock_8x8.txt");
  cfg.entropy = entropy;
  cfg.regularizer = reg;
  cfg.episode_cap = cap;
  return cfg;
}

}  // namespace

TEST_CASE("convergence threshold") {
  CHECK(ConvergenceDetector::threshold({1450.0, 0.0}, 0.05) == doctest::Approx(1377.5));
  CHECK(ConvergenceDetector::threshold({-10.0, -50.0}, 0.05) == doctest::Approx(-12.0));
}

TEST_CASE("convergence needs five qualifying episodes, not necessarily consecutive") {
  ConvergenceDetector d;
  const ScoreReference ref{100.0, 0.0};
  const std::vector<double> scores{96, 10, 95, 99, 0, 100, 20};
  std::uint64_t requests = 0;
  for (double s : scores) CHECK_FALSE(d.observe(s, ref, ++requests));
  CHECK(d.qualifying_count() == 4);
  CHECK(d.observe(97, ref, 42));
  CHECK(d.converged());
  CHECK(d.average_score() == doctest::Approx((96 + 95 + 99 + 100 + 97) / 5.0));
  CHECK(d.requests_at_convergence() == 42);
  CHECK(d.observe(0, ref, 99));
  CHECK(d.requests_at_convergence() == 42);
}

TEST_CASE("always_request requests every step, never_request none") {
  const auto cfg = fixture_config(EntropyMode::action_reward, RegularizerMode::hyperbolic, 3);
  Trainer always(cfg, 1, {}, GateOverride::always_request);
  for (int i = 0; i < 3; ++i) {
    const auto m = always.run_episode();
    CHECK(m.requests == static_cast<std::uint64_t>(m.steps));
  }
  CHECK(always.feedback_buffer().size() == always.total_steps());

  Trainer never(cfg, 1, {}, GateOverride::never_request);
  for (int i = 0; i < 3; ++i) CHECK(never.run_episode().requests == 0);
  CHECK(never.feedback_buffer().empty());
  CHECK(never.reward_model_updates() == 0);

  auto baseline = fixture_config(EntropyMode::off, RegularizerMode::none, 3);
  CHECK_THROWS_AS(Trainer(baseline, 1, {}, GateOverride::never_request), ConfigError);
}

TEST_CASE("scripted corridor episode: trace order") {
  ExperimentConfig cfg;
  cfg.env = "keylock-small";
  cfg.layout_text = testing::read_fixture("keylock_corridor.txt");
  cfg.entropy = EntropyMode::action_reward;
  cfg.regularizer = RegularizerMode::hyperbolic;
  cfg.batch_size = 2;
  std::vector<std::string> trace;
  TrainerHooks hooks;
  hooks.on_trace = [&](TraceEvent e) { trace.push_back(to_string(e)); };
  hooks.script = [](const Vector&, int) { return Action{static_cast<int>(Direction::east)}; };
  Trainer trainer(cfg, 0, hooks, GateOverride::always_request);
  const auto m = trainer.run_episode();
  CHECK(m.steps == 3);
  CHECK(m.success);
  REQUIRE(trace.size() == 38);
  // Feedback holds one transition after step 1, so the model first trains on step 2.
  CHECK(std::count(trace.begin(), trace.end(), "reward_model_update") == 2);
  CHECK(std::count(trace.begin(), trace.end(), "agent_update") == 3);
  CHECK(trace[35] == "sync_reward_target");
  CHECK(trace[36] == "sync_agent_target");
  CHECK(trace[37] == "decay_epsilon");
}

TEST_CASE("a run stops at the episode cap when it does not converge") {
  const auto cfg = fixture_config(EntropyMode::off, RegularizerMode::none, 4);
  const auto r = train(cfg, 3);
  CHECK(r.episodes.size() == 4);
  CHECK_FALSE(r.convergence.converged);
  std::vector<double> returns;
  for (const auto& e : r.episodes) returns.push_back(e.episode_return);
  std::sort(returns.rbegin(), returns.rend());
  CHECK(r.best_five_average == doctest::Approx((returns[0] + returns[1] + returns[2] + returns[3]) / 4.0));
  CHECK(r.highest_score() == r.best_five_average);
}

TEST_CASE("runs are reproducible for a fixed seed") {
  const auto cfg = fixture_config(EntropyMode::action_reward, RegularizerMode::hyperbolic, 6);
  const auto a = train(cfg, 11);
  const auto b = train(cfg, 11);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].episode_return == b.episodes[i].episode_return);
    CHECK(a.episodes[i].requests == b.episodes[i].requests);
  }
  const auto c = train(cfg, 12);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.episodes.size(), c.episodes.size()); ++i)
    differs = differs || a.episodes[i].episode_return != c.episodes[i].episode_return;
  CHECK(differs);
}

TEST_CASE("every mode performs one agent update per step") {
  const std::vector<std::pair<EntropyMode, RegularizerMode>> modes{
      {EntropyMode::off, RegularizerMode::none},
      {EntropyMode::action, RegularizerMode::none},
      {EntropyMode::action_reward, RegularizerMode::hyperbolic},
      {EntropyMode::random, RegularizerMode::none},
      {EntropyMode::constant, RegularizerMode::exponential}};
  for (const auto& [entropy, reg] : modes) {
    const auto r = train(fixture_config(entropy, reg, 3), 5);
    CHECK(r.agent_updates == r.total_steps);
    CHECK(r.total_requests <= r.total_steps);
    CHECK(r.reward_model_updates <= r.total_steps);
    if (entropy == EntropyMode::off) {
      CHECK(r.reward_model_updates == 0);
      CHECK(r.total_requests == r.total_steps);
    }
  }
}

TEST_CASE("step records satisfy the gate rule") {
  const auto cfg = fixture_config(EntropyMode::action_reward, RegularizerMode::hyperbolic, 3);
  std::vector<StepRecord> steps;
  TrainerHooks hooks;
  hooks.on_step = [&](const StepRecord& s) { steps.push_back(s); };
  Trainer trainer(cfg, 2, hooks);
  for (int i = 0; i < 3; ++i) trainer.run_episode();
  REQUIRE(!steps.empty());
  long n = 0;
  for (const auto& s : steps) {
    const auto& c = s.confidence;
    CHECK(c.n == n);
    CHECK(c.request == (c.fused_confidence * c.regularizer <= cfg.threshold));
    CHECK(c.regularizer == doctest::Approx(1.0 / (1.0 + static_cast<double>(c.n))));
    CHECK(c.reward_confidence.has_value());
    CHECK(s.source == (c.request ? "env" : "imputed"));
    n = c.request ? 0 : n + 1;
  }
  CHECK(trainer.reward_entropy_queries() == steps.size());
}

TEST_CASE("AE mode never queries the reward model") {
  const auto cfg = fixture_config(EntropyMode::action, RegularizerMode::hyperbolic, 3);
  Trainer trainer(cfg, 4);
  for (int i = 0; i < 3; ++i) trainer.run_episode();
  CHECK(trainer.reward_model() != nullptr);
  CHECK(trainer.reward_entropy_queries() == 0);
}

TEST_CASE("goal environments run with hindsight relabeling") {
  ExperimentConfig cfg;
  cfg.env = "bitflip";
  cfg.bits = 4;
  cfg.her = true;
  cfg.episode_cap = 5;
  Trainer trainer(cfg, 0);
  for (int i = 0; i < 5; ++i) trainer.run_episode();
  // Relabeled copies make the replay buffer larger than the number of steps.
  CHECK(trainer.replay_buffer().size() > trainer.total_steps());
}
