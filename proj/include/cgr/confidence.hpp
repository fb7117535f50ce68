#pragma once

#include <optional>
#include <string>

#include "cgr/common.hpp"
#include "cgr/nn.hpp"

namespace cgr {

/// How the gate obtains its confidence.
enum class EntropyMode {
  off,            // no gating: every reward is requested
  action,         // AE: action entropy only
  action_reward,  // AE+RE: harmonic mean of action and reward confidences
  random,         // confidence 1 - U(0, 1)
  constant,       // fixed confidence, requests driven by the regularizer
};

enum class RegularizerMode { none, exponential, hyperbolic };

/// Reading of the constant baseline. `confidence_one` treats the constant as
/// a confidence of 1; `entropy_one` applies Conf = 1 - H to an entropy of 1.
enum class ConstantReading { confidence_one, entropy_one };

inline constexpr double kEntropyClip = 10.0;  // bits
inline constexpr double kDefaultNuExponential = 0.5;
inline constexpr double kDefaultNuHyperbolic = 1.0;

EntropyMode parse_entropy_mode(const std::string& s);
RegularizerMode parse_regularizer_mode(const std::string& s);
std::string to_string(EntropyMode m);
std::string to_string(RegularizerMode m);
double default_nu(RegularizerMode m);

/// Shannon entropy in bits of softmax(q).
double discrete_action_entropy_bits(const Vector& q_values);
/// Shannon entropy of softmax(q) divided by log2(|A|), in [0, 1].
double discrete_action_entropy(const Vector& q_values);

/// Differential entropy in bits summed over the head's dimensions, unclipped.
double gaussian_differential_entropy_bits(const nn::GaussianHead& head);
/// Differential entropy clipped to [0, 10] bits and divided by 10.
double gaussian_differential_entropy(const nn::GaussianHead& head);

double to_confidence(double normalized_entropy);
/// Harmonic mean 2ab / (a + b), 0 when a + b = 0.
double fuse(double action_confidence, double reward_confidence);
/// exp(-nu n), 1 / (1 + nu n), or 1 for mode none.
double regularizer(RegularizerMode mode, double nu, long n);

struct GateDecision {
  bool request = false;
  double effective_confidence = 0.0;
  long n_after = 0;
};

/// Request iff fused * multiplier <= threshold; n resets on request and
/// otherwise grows by one.
GateDecision gate(double fused_confidence, double multiplier, double threshold, long n);

struct ActionEntropy {
  double bits = 0.0;
  double normalized = 0.0;
};

struct ConfidenceReport {
  double action_entropy_bits = 0.0;
  /// Clipped to [0, 10]; absent when the reward model was not consulted.
  std::optional<double> reward_entropy_bits;
  double action_confidence = 0.0;
  std::optional<double> reward_confidence;
  double regularizer = 1.0;
  double fused_confidence = 0.0;
  bool request = true;
  /// Steps since the last environment reward, as used by this decision.
  long n = 0;
  long n_after = 0;
};

struct GateConfig {
  EntropyMode mode = EntropyMode::action_reward;
  RegularizerMode regularizer = RegularizerMode::none;
  double nu = 1.0;
  double threshold = 0.25;
  ConstantReading constant_reading = ConstantReading::confidence_one;
};

/// Per-run gate: combines the configured confidence source with the
/// regularizer and keeps the steps-since-reward counter.
class ConfidenceGate {
 public:
  explicit ConfidenceGate(GateConfig cfg);

  const GateConfig& config() const { return cfg_; }
  bool needs_reward_model() const { return cfg_.mode == EntropyMode::action_reward; }
  long steps_since_reward() const { return n_; }

  /// `reward_head` must be given exactly when needs_reward_model(). `rng`
  /// is only drawn from in random mode. `forced` replaces the decision (the
  /// counter still follows it).
  ConfidenceReport decide(const ActionEntropy& action, const nn::GaussianHead* reward_head, Rng& rng,
                          std::optional<bool> forced = std::nullopt);

 private:
  GateConfig cfg_;
  long n_ = 0;
};

}  // namespace cgr
