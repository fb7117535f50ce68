#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgr/confidence.hpp"
#include "cgr/env.hpp"

namespace cgr {

enum class AgentKind { dqn, a2c };
enum class TargetSync { soft, hard };

/// One algorithm variant of a sweep: a name plus the gate it implies.
struct Variant {
  std::string name;
  EntropyMode entropy = EntropyMode::off;
  RegularizerMode regularizer = RegularizerMode::none;
};

/// Resolves a variant name such as "dqn", "ae", "ae+re-hyper", "random" or
/// "constant" to its gate settings.
Variant parse_variant(const std::string& name);

struct ExperimentConfig {
  // Environment
  std::string env = "keylock-small";
  std::uint64_t layout_seed = 0;
  /// Key-lock grid text; filled from `layout_file` when parsing a file.
  std::string layout_text;
  int bits = 8;

  // Agent
  AgentKind agent = AgentKind::dqn;
  bool her = false;
  int her_k = 4;
  int hidden_width = 64;
  int reward_hidden_width = 32;
  int hidden_layers = 2;
  TargetSync target_sync = TargetSync::soft;

  // Gate
  EntropyMode entropy = EntropyMode::off;
  RegularizerMode regularizer = RegularizerMode::none;
  /// Unset means the per-regularizer default (0.5 exp, 1 hyper).
  std::optional<double> nu;
  double threshold = 0.25;
  ConstantReading constant_reading = ConstantReading::confidence_one;
  bool impute_sample = false;
  bool her_to_feedback = true;

  // Optimisation
  double epsilon = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_min = 0.01;
  double learning_rate = 0.005;
  double discount = 0.99;
  double tau = 0.99;
  std::size_t buffer_size = 40000;
  std::size_t batch_size = 16;

  // Run control
  std::vector<std::uint64_t> seeds{0};
  /// Unset means the per-environment default.
  std::optional<int> episode_cap;
  /// Named variants for sweeps; empty means one variant from entropy/regularizer.
  std::vector<std::string> variants;

  int resolved_episode_cap() const;
  double resolved_nu() const;
  GateConfig gate_config() const;
  EnvironmentSpec env_spec() const;
  std::vector<Variant> resolved_variants() const;
  /// Copy with entropy/regularizer taken from `v`.
  ExperimentConfig with_variant(const Variant& v) const;

  /// Throws ConfigError when fields are out of range or inconsistent.
  void validate() const;
};

/// Parses flat TOML (`key = value` lines, `#` comments, strings, numbers,
/// booleans and single-line arrays) over the defaults. Unknown keys are
/// rejected. `base_dir` resolves a relative `layout_file`.
ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config(const std::filesystem::path& path);

}  // namespace cgr
