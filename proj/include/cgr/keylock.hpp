#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cgr/env.hpp"

namespace cgr {

enum class Cell : char { empty = '.', obstacle = '#', pit = 'P', key = 'K', lock = 'L' };

enum class Direction { north = 0, south = 1, east = 2, west = 3 };

inline constexpr int kDirRow[4] = {-1, 1, 0, 0};
inline constexpr int kDirCol[4] = {0, 0, 1, -1};

/// Static key-lock grid: occupancy of every cell plus the agent start.
struct KeyLockLayout {
  struct Params {
    int size = 20;
    int keys = 2;
    int locks = 2;
    int pits = 8;
    int obstacles = 20;
  };
  static Params full_scale() { return {}; }
  static Params desk_scale() { return {8, 1, 1, 3, 6}; }

  int rows = 0;
  int cols = 0;
  std::vector<Cell> cells;
  int start_row = 0;
  int start_col = 0;

  Cell at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
  bool inside(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
  int count(Cell kind) const;

  /// Parses the plain-text grid: one line per row, one of `.#PKLA` per cell,
  /// exactly one `A` (agent start, empty underneath).
  static KeyLockLayout parse(std::string_view text);
  std::string to_text() const;

  /// Seeded rejection sampling; the result is always solvable within the
  /// episode step limit.
  static KeyLockLayout generate(const Params& params, std::uint64_t seed);
};

struct KeyLockState {
  std::vector<Cell> cells;  // keys and locks disappear once collected
  int row = 0;
  int col = 0;
  int keys_obtained = 0;
  int locks_opened = 0;
};

inline constexpr int kKeyLockFeatureWidth = 26;
inline constexpr int kKeyLockMaxSteps = 100;
inline constexpr double kKeyReward = 500.0;
inline constexpr double kLockReward = 1000.0;
inline constexpr double kPitReward = -400.0;
inline constexpr double kStepReward = -10.0;

/// Feature vector layout (26 entries):
///   [0,4)   distance from each N,S,E,W neighbour cell to the nearest key
///   [4,8)   same for the nearest unopened lock (0 when none remain)
///   [8,12)  neighbour is an obstacle or outside the grid
///   [12,16) neighbour holds a key or an unopened lock
///   [16,24) pit one and two cells away, ordered N1,N2,S1,S2,E1,E2,W1,W2
///   24, 25  keys obtained, locks opened
Vector keylock_features(const KeyLockLayout& layout, const KeyLockState& state);

/// Best achievable episode return, by exhaustive dynamic programming over
/// (position, collected keys, opened locks) for the full step budget.
double keylock_optimal_return(const KeyLockLayout& layout, int max_steps = kKeyLockMaxSteps);

class KeyLockEnv final : public Environment {
 public:
  explicit KeyLockEnv(KeyLockLayout layout);

  std::string name() const override { return "keylock"; }
  int state_width() const override { return kKeyLockFeatureWidth; }
  ActionSpace action_space() const override { return {ActionKind::discrete, 4}; }
  int max_steps() const override { return kKeyLockMaxSteps; }
  ScoreReference score_reference() const override { return {optimum_, 0.0}; }

  const KeyLockLayout& layout() const { return layout_; }
  const KeyLockState& state() const { return state_; }
  /// Current grid with collected items removed and the agent drawn as `A`.
  std::string render() const;

 protected:
  Vector do_reset(std::uint64_t seed) override;
  Outcome do_step(const Action& action) override;

 private:
  KeyLockLayout layout_;
  KeyLockState state_;
  double optimum_;
};

}  // namespace cgr
