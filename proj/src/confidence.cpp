#include "cgr/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cgr {

EntropyMode parse_entropy_mode(const std::string& s) {
  if (s == "off") return EntropyMode::off;
  if (s == "AE" || s == "ae") return EntropyMode::action;
  if (s == "AE+RE" || s == "ae+re") return EntropyMode::action_reward;
  if (s == "random") return EntropyMode::random;
  if (s == "constant") return EntropyMode::constant;
  throw ConfigError("unknown entropy mode: " + s);
}

RegularizerMode parse_regularizer_mode(const std::string& s) {
  if (s == "none") return RegularizerMode::none;
  if (s == "exp") return RegularizerMode::exponential;
  if (s == "hyper") return RegularizerMode::hyperbolic;
  throw ConfigError("unknown regularizer: " + s);
}

std::string to_string(EntropyMode m) {
  switch (m) {
    case EntropyMode::off: return "off";
    case EntropyMode::action: return "AE";
    case EntropyMode::action_reward: return "AE+RE";
    case EntropyMode::random: return "random";
    case EntropyMode::constant: return "constant";
  }
  return "?";
}

std::string to_string(RegularizerMode m) {
  switch (m) {
    case RegularizerMode::none: return "none";
    case RegularizerMode::exponential: return "exp";
    case RegularizerMode::hyperbolic: return "hyper";
  }
  return "?";
}

double default_nu(RegularizerMode m) {
  return m == RegularizerMode::exponential ? kDefaultNuExponential : kDefaultNuHyperbolic;
}

double discrete_action_entropy_bits(const Vector& q_values) {
  const Vector p = nn::softmax(q_values);
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) h -= p(i) * std::log2(p(i));
  return std::max(h, 0.0);
}

double discrete_action_entropy(const Vector& q_values) {
  if (q_values.size() < 2) throw ContractError("action entropy needs at least two actions");
  const double h = discrete_action_entropy_bits(q_values) / std::log2(static_cast<double>(q_values.size()));
  return std::clamp(h, 0.0, 1.0);
}

double gaussian_differential_entropy_bits(const nn::GaussianHead& head) {
  if (head.stddev.size() == 0) throw DimensionError("differential entropy: empty head");
  if ((head.stddev.array() < nn::kSigmaFloor).any())
    throw ContractError("differential entropy: stddev below floor");
  double h = 0.0;
  for (Eigen::Index i = 0; i < head.stddev.size(); ++i) {
    const double s = head.stddev(i);
    h += 0.5 * std::log2(2.0 * std::numbers::pi * std::numbers::e * s * s);
  }
  return h;
}

double gaussian_differential_entropy(const nn::GaussianHead& head) {
  return std::clamp(gaussian_differential_entropy_bits(head), 0.0, kEntropyClip) / kEntropyClip;
}

double to_confidence(double normalized_entropy) {
  if (!(normalized_entropy >= 0.0 && normalized_entropy <= 1.0))
    throw ContractError("entropy must be normalized to [0, 1]");
  return 1.0 - normalized_entropy;
}

double fuse(double a, double b) {
  if (a + b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double regularizer(RegularizerMode mode, double nu, long n) {
  if (n < 0) throw ContractError("regularizer: step count must be non-negative");
  switch (mode) {
    case RegularizerMode::none: return 1.0;
    case RegularizerMode::exponential: return std::exp(-nu * static_cast<double>(n));
    case RegularizerMode::hyperbolic: return 1.0 / (1.0 + nu * static_cast<double>(n));
  }
  return 1.0;
}

GateDecision gate(double fused_confidence, double multiplier, double threshold, long n) {
  GateDecision d;
  d.effective_confidence = fused_confidence * multiplier;
  d.request = d.effective_confidence <= threshold;
  d.n_after = d.request ? 0 : n + 1;
  return d;
}

ConfidenceGate::ConfidenceGate(GateConfig cfg) : cfg_(cfg) {
  if (cfg_.nu <= 0.0) throw ConfigError("regularizer temperature must be positive");
}

ConfidenceReport ConfidenceGate::decide(const ActionEntropy& action, const nn::GaussianHead* reward_head, Rng& rng,
                                        std::optional<bool> forced) {
  if (needs_reward_model() != (reward_head != nullptr))
    throw ContractError("reward head must be supplied exactly in AE+RE mode");
  ConfidenceReport r;
  r.n = n_;
  r.action_entropy_bits = action.bits;
  r.action_confidence = to_confidence(action.normalized);
  switch (cfg_.mode) {
    case EntropyMode::off:
      r.fused_confidence = 0.0;
      r.regularizer = 1.0;
      r.request = forced.value_or(true);
      r.n_after = r.request ? 0 : n_ + 1;
      n_ = r.n_after;
      return r;
    case EntropyMode::action:
      r.fused_confidence = r.action_confidence;
      break;
    case EntropyMode::action_reward: {
      const double bits = gaussian_differential_entropy_bits(*reward_head);
      r.reward_entropy_bits = std::clamp(bits, 0.0, kEntropyClip);
      r.reward_confidence = to_confidence(*r.reward_entropy_bits / kEntropyClip);
      r.fused_confidence = fuse(r.action_confidence, *r.reward_confidence);
      break;
    }
    case EntropyMode::random:
      r.fused_confidence = 1.0 - uniform01(rng);
      break;
    case EntropyMode::constant:
      r.fused_confidence = cfg_.constant_reading == ConstantReading::confidence_one ? 1.0 : 0.0;
      break;
  }
  r.regularizer = regularizer(cfg_.regularizer, cfg_.nu, n_);
  const auto d = gate(r.fused_confidence, r.regularizer, cfg_.threshold, n_);
  r.request = forced.value_or(d.request);
  r.n_after = r.request ? 0 : n_ + 1;
  n_ = r.n_after;
  return r;
}

}  // namespace cgr
