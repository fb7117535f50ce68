#include "cgr/env.hpp"

#include <atomic>

#include "cgr/bitflip.hpp"
#include "cgr/keylock.hpp"
#include "cgr/parking.hpp"

namespace cgr {

namespace {
std::atomic<std::uint64_t> next_environment_id{1};
}

Vector encode_action(const ActionSpace& space, const Action& action) {
  if (space.kind == ActionKind::discrete) {
    const int* index = std::get_if<int>(&action);
    if (!index) throw ContractError("discrete action space given a continuous action");
    if (*index < 0 || *index >= space.size) throw ContractError("action index out of range");
    Vector v = Vector::Zero(space.size);
    v(*index) = 1.0;
    return v;
  }
  const Vector* vec = std::get_if<Vector>(&action);
  if (!vec) throw ContractError("continuous action space given a discrete action");
  if (vec->size() != space.size) throw DimensionError("action vector width mismatch");
  return *vec;
}

Environment::Environment() : id_(next_environment_id.fetch_add(1)) {}

Vector Environment::reset(std::uint64_t seed) {
  ++epoch_;
  ledger_.clear();
  steps_ = 0;
  done_ = false;
  episode_return_ = 0.0;
  success_ = false;
  return do_reset(seed);
}

EnvStep Environment::step(const Action& action) {
  if (done_) throw ContractError(name() + ": step after episode end");
  Outcome outcome = do_step(action);
  ++steps_;
  episode_return_ += outcome.reward;
  success_ = success_ || outcome.success;
  EnvStep result;
  result.next_state = std::move(outcome.next_state);
  result.terminal = outcome.terminal;
  result.truncated = !outcome.terminal && steps_ >= max_steps();
  result.reward = RewardToken(id_, epoch_, static_cast<std::uint32_t>(ledger_.size()));
  ledger_.emplace_back(outcome.reward);
  done_ = result.terminal || result.truncated;
  return result;
}

double Environment::redeem(const RewardToken& token) {
  if (token.owner_ != id_) throw ContractError("reward token issued by another environment");
  if (token.epoch_ != epoch_) throw ContractError("reward token from a finished episode");
  if (token.index_ >= ledger_.size()) throw ContractError("unknown reward token");
  auto& slot = ledger_[token.index_];
  if (!slot) throw ContractError("reward token already redeemed");
  const double value = *slot;
  slot.reset();
  ++requests_;
  return value;
}

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec) {
  if (spec.id == "keylock" || spec.id == "keylock-small") {
    if (!spec.layout_text.empty())
      return std::make_unique<KeyLockEnv>(KeyLockLayout::parse(spec.layout_text));
    const auto params = spec.id == "keylock" ? KeyLockLayout::full_scale() : KeyLockLayout::desk_scale();
    return std::make_unique<KeyLockEnv>(KeyLockLayout::generate(params, spec.layout_seed));
  }
  if (spec.id == "parking") return std::make_unique<ParkingEnv>();
  if (spec.id == "bitflip") return std::make_unique<BitFlipEnv>(spec.bits);
  throw ConfigError("unknown environment id: " + spec.id);
}

}  // namespace cgr
