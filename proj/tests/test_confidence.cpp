#include <cmath>
#include <numbers>

#include "cgr/confidence.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cgr;

TEST_CASE("discrete action entropy") {
  CHECK(discrete_action_entropy(Vector::Zero(4)) == doctest::Approx(1.0).epsilon(1e-12));
  Vector peaked(4);
  peaked << 1000, 0, 0, 0;
  CHECK(discrete_action_entropy(peaked) < 1e-6);
  Vector two(2);
  two << 1, 0;
  // Direct summation oracle.
  const double p = std::exp(1.0) / (std::exp(1.0) + 1.0);
  const double h = -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
  CHECK(discrete_action_entropy(two) == doctest::Approx(h).epsilon(1e-12));
  CHECK(discrete_action_entropy(two) == doctest::Approx(0.83994).epsilon(1e-4));
  CHECK(discrete_action_entropy_bits(Vector::Zero(8)) == doctest::Approx(3.0));
  CHECK_THROWS_AS(discrete_action_entropy(Vector::Zero(1)), ContractError);
}

TEST_CASE("gaussian differential entropy") {
  nn::GaussianHead unit{Vector::Zero(1), Vector::Ones(1)};
  const double closed = 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e);
  CHECK(gaussian_differential_entropy_bits(unit) == doctest::Approx(closed).epsilon(1e-12));
  CHECK(gaussian_differential_entropy(unit) == doctest::Approx(0.20471).epsilon(1e-4));
  nn::GaussianHead wide{Vector::Zero(1), Vector::Constant(1, 10.0)};
  CHECK(gaussian_differential_entropy(wide) == doctest::Approx(0.53690).epsilon(1e-4));
  nn::GaussianHead narrow{Vector::Zero(1), Vector::Constant(1, 0.01)};
  CHECK(gaussian_differential_entropy_bits(narrow) < 0.0);
  CHECK(gaussian_differential_entropy(narrow) == 0.0);
  nn::GaussianHead huge{Vector::Zero(1), Vector::Constant(1, 1e6)};
  CHECK(gaussian_differential_entropy(huge) == 1.0);
  nn::GaussianHead pair{Vector::Zero(2), Vector::Ones(2)};
  CHECK(gaussian_differential_entropy_bits(pair) == doctest::Approx(2.0 * closed));
}

TEST_CASE("confidence, fusion and regularizers") {
  CHECK(to_confidence(0.0) == 1.0);
  CHECK(to_confidence(1.0) == 0.0);
  CHECK(to_confidence(0.2047) == doctest::Approx(0.7953));
  CHECK(fuse(1.0, 1.0) == 1.0);
  CHECK(fuse(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(fuse(0.0, 0.9) == 0.0);
  CHECK(fuse(0.0, 0.0) == 0.0);
  CHECK(regularizer(RegularizerMode::exponential, 0.5, 0) == 1.0);
  CHECK(regularizer(RegularizerMode::hyperbolic, 1.0, 3) == doctest::Approx(0.25));
  CHECK(regularizer(RegularizerMode::exponential, 0.5, 2) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(regularizer(RegularizerMode::none, 1.0, 50) == 1.0);
  CHECK_THROWS(regularizer(RegularizerMode::hyperbolic, 1.0, -1));
  CHECK(default_nu(RegularizerMode::exponential) == 0.5);
  CHECK(default_nu(RegularizerMode::hyperbolic) == 1.0);
}

TEST_CASE("gate decision") {
  auto skip = gate(1.0, 1.0, 0.25, 4);
  CHECK_FALSE(skip.request);
  CHECK(skip.n_after == 5);
  auto req = gate(0.2, 1.0, 0.25, 4);
  CHECK(req.request);
  CHECK(req.n_after == 0);
  CHECK(gate(0.25, 1.0, 0.25, 0).request);
}

TEST_CASE("hyperbolic regularizer forces a request once 0.9/(1+n) <= 0.25") {
  // Smallest n with 0.9 / (1 + n) <= 0.25 is n = 3 (2.6 rounded up).
  long n = 0;
  int first_request = -1;
  for (int step = 0; step < 10; ++step) {
    const auto d = gate(0.9, regularizer(RegularizerMode::hyperbolic, 1.0, n), 0.25, n);
    if (d.request) {
      first_request = static_cast<int>(n);
      break;
    }
    n = d.n_after;
  }
  CHECK(first_request == 3);
}

TEST_CASE("constant mode with exponential regularizer requests every time n reaches 3") {
  GateConfig cfg;
  cfg.mode = EntropyMode::constant;
  cfg.regularizer = RegularizerMode::exponential;
  cfg.nu = 0.5;
  ConfidenceGate gate(cfg);
  Rng rng(0);
  for (int step = 0; step < 40; ++step) {
    const long n = gate.steps_since_reward();
    const auto r = gate.decide({}, nullptr, rng);
    CHECK(r.request == (std::exp(-0.5 * n) <= 0.25));
    CHECK(r.request == (n == 3));
  }
}

TEST_CASE("random mode is reproducible for a fixed seed") {
  GateConfig cfg;
  cfg.mode = EntropyMode::random;
  cfg.regularizer = RegularizerMode::none;
  ConfidenceGate a(cfg), b(cfg);
  Rng ra(17), rb(17);
  for (int i = 0; i < 200; ++i) CHECK(a.decide({}, nullptr, ra).request == b.decide({}, nullptr, rb).request);
}

TEST_CASE("reward head is required exactly in AE+RE mode") {
  GateConfig ae;
  ae.mode = EntropyMode::action;
  ConfidenceGate g(ae);
  CHECK_FALSE(g.needs_reward_model());
  Rng rng(0);
  nn::GaussianHead head{Vector::Zero(1), Vector::Ones(1)};
  CHECK_THROWS_AS(g.decide({}, &head, rng), ContractError);

  GateConfig are;
  are.mode = EntropyMode::action_reward;
  ConfidenceGate h(are);
  CHECK(h.needs_reward_model());
  CHECK_THROWS_AS(h.decide({}, nullptr, rng), ContractError);
  const auto r = h.decide({2.0, 1.0}, &head, rng);
  REQUIRE(r.reward_confidence.has_value());
  CHECK(*r.reward_confidence == doctest::Approx(1.0 - 0.20471).epsilon(1e-4));
  CHECK(r.action_confidence == 0.0);
  CHECK(r.fused_confidence == 0.0);
  CHECK(r.request);
}

TEST_CASE("logged report fields reconstruct the decision") {
  GateConfig cfg;
  cfg.mode = EntropyMode::action;
  cfg.regularizer = RegularizerMode::hyperbolic;
  cfg.nu = 1.0;
  ConfidenceGate gate(cfg);
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    Vector q = testing::random_vector(rng, 4, 5.0);
    const ActionEntropy ae{discrete_action_entropy_bits(q), discrete_action_entropy(q)};
    const auto r = gate.decide(ae, nullptr, rng);
    CHECK(r.request == (r.fused_confidence * r.regularizer <= cfg.threshold));
    CHECK(r.regularizer == doctest::Approx(1.0 / (1.0 + static_cast<double>(r.n))));
  }
}

TEST_CASE("forced decisions drive the counter") {
  GateConfig cfg;
  cfg.mode = EntropyMode::constant;
  cfg.regularizer = RegularizerMode::none;
  ConfidenceGate gate(cfg);
  Rng rng(0);
  CHECK(gate.decide({}, nullptr, rng, true).request);
  CHECK(gate.steps_since_reward() == 0);
  CHECK_FALSE(gate.decide({}, nullptr, rng, false).request);
  CHECK(gate.steps_since_reward() == 1);
}

TEST_CASE("mode names") {
  CHECK(parse_entropy_mode("ae+re") == EntropyMode::action_reward);
  CHECK(parse_regularizer_mode("hyper") == RegularizerMode::hyperbolic);
  CHECK(to_string(parse_entropy_mode(to_string(EntropyMode::random))) == "random");
  CHECK_THROWS_AS(parse_regularizer_mode("cubic"), ConfigError);
}
