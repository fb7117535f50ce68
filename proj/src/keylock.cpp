#include "cgr/keylock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace cgr {

int KeyLockLayout::count(Cell kind) const {
  return static_cast<int>(std::count(cells.begin(), cells.end(), kind));
}

KeyLockLayout KeyLockLayout::parse(std::string_view text) {
  KeyLockLayout layout;
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw ContractError("key-lock layout: empty grid");
  layout.rows = static_cast<int>(lines.size());
  layout.cols = static_cast<int>(lines.front().size());
  int agents = 0;
  for (int r = 0; r < layout.rows; ++r) {
    if (static_cast<int>(lines[r].size()) != layout.cols)
      throw ContractError("key-lock layout: ragged row " + std::to_string(r));
    for (int c = 0; c < layout.cols; ++c) {
      const char ch = lines[r][c];
      switch (ch) {
        case '.': case '#': case 'P': case 'K': case 'L':
          layout.cells.push_back(static_cast<Cell>(ch));
          break;
        case 'A':
          layout.cells.push_back(Cell::empty);
          layout.start_row = r;
          layout.start_col = c;
          ++agents;
          break;
        default:
          throw ContractError(std::string("key-lock layout: unknown cell '") + ch + "'");
      }
    }
  }
  if (agents != 1) throw ContractError("key-lock layout: expected exactly one agent start");
  return layout;
}

std::string KeyLockLayout::to_text() const {
  std::string out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c)
      out.push_back(r == start_row && c == start_col ? 'A' : static_cast<char>(at(r, c)));
    out.push_back('\n');
  }
  return out;
}

namespace {

struct PlanResult {
  double optimum = -std::numeric_limits<double>::infinity();
  bool completable = false;
};

// Exhaustive search over (cell, key mask, lock mask) for `max_steps` steps.
PlanResult plan(const KeyLockLayout& layout, int max_steps) {
  std::vector<int> key_slot(layout.cells.size(), -1);
  std::vector<int> lock_slot(layout.cells.size(), -1);
  int keys = 0;
  int locks = 0;
  for (std::size_t i = 0; i < layout.cells.size(); ++i) {
    if (layout.cells[i] == Cell::key) key_slot[i] = keys++;
    if (layout.cells[i] == Cell::lock) lock_slot[i] = locks++;
  }
  if (keys > 16 || locks > 16) throw ContractError("key-lock layout: too many keys or locks to plan");
  const std::size_t key_states = std::size_t{1} << keys;
  const std::size_t lock_states = std::size_t{1} << locks;
  const std::size_t cells = layout.cells.size();
  const std::size_t total = cells * key_states * lock_states;
  const unsigned all_keys = static_cast<unsigned>(key_states - 1);
  const unsigned all_locks = static_cast<unsigned>(lock_states - 1);
  auto index = [&](std::size_t cell, unsigned km, unsigned lm) {
    return (cell * key_states + km) * lock_states + lm;
  };

  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> cur(total, kNone);
  std::vector<double> next(total, kNone);
  cur[index(static_cast<std::size_t>(layout.start_row * layout.cols + layout.start_col), 0, 0)] = 0.0;
  PlanResult result;
  for (int t = 0; t < max_steps; ++t) {
    std::fill(next.begin(), next.end(), kNone);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const int r = static_cast<int>(cell) / layout.cols;
      const int c = static_cast<int>(cell) % layout.cols;
      for (unsigned km = 0; km <= all_keys; ++km) {
        for (unsigned lm = 0; lm <= all_locks; ++lm) {
          const double value = cur[index(cell, km, lm)];
          if (value == kNone) continue;
          for (int d = 0; d < 4; ++d) {
            int nr = r + kDirRow[d];
            int nc = c + kDirCol[d];
            if (!layout.inside(nr, nc) || layout.at(nr, nc) == Cell::obstacle) {
              nr = r;
              nc = c;
            }
            const auto ncell = static_cast<std::size_t>(nr * layout.cols + nc);
            unsigned nkm = km;
            unsigned nlm = lm;
            double reward = kStepReward;
            bool terminal = false;
            const Cell kind = layout.cells[ncell];
            if (kind == Cell::pit) {
              reward = kPitReward;
              terminal = true;
            } else if (kind == Cell::key && !(km & (1u << key_slot[ncell]))) {
              nkm |= 1u << key_slot[ncell];
              reward = kKeyReward;
            } else if (kind == Cell::lock && !(lm & (1u << lock_slot[ncell])) &&
                       std::popcount(km) > std::popcount(lm)) {
              nlm |= 1u << lock_slot[ncell];
              reward = kLockReward;
            }
            if (nkm == all_keys && nlm == all_locks) {
              terminal = true;
              result.completable = true;
            }
            const double v = value + reward;
            if (terminal) {
              result.optimum = std::max(result.optimum, v);
            } else {
              double& slot = next[index(ncell, nkm, nlm)];
              slot = std::max(slot, v);
            }
          }
        }
      }
    }
    std::swap(cur, next);
  }
  for (double v : cur) result.optimum = std::max(result.optimum, v);
  return result;
}

int nearest_distance_squared(const KeyLockState& state, int cols, Cell kind, int r, int c, bool& found) {
  int best = std::numeric_limits<int>::max();
  found = false;
  for (std::size_t i = 0; i < state.cells.size(); ++i) {
    if (state.cells[i] != kind) continue;
    const int kr = static_cast<int>(i) / cols;
    const int kc = static_cast<int>(i) % cols;
    const int d2 = (kr - r) * (kr - r) + (kc - c) * (kc - c);
    best = std::min(best, d2);
    found = true;
  }
  return best;
}

}  // namespace

double keylock_optimal_return(const KeyLockLayout& layout, int max_steps) {
  return plan(layout, max_steps).optimum;
}

KeyLockLayout KeyLockLayout::generate(const Params& params, std::uint64_t seed) {
  const int n = params.size * params.size;
  const int placed = 1 + params.keys + params.locks + params.pits + params.obstacles;
  if (params.size < 2 || placed > n) throw ContractError("key-lock layout: too many objects for grid");
  Rng rng(derive_seed(seed, 0x6b65796c6f636bULL));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates with our own uniform draw for portability.
    for (int i = 0; i < placed; ++i) {
      const auto j = static_cast<std::size_t>(i) + uniform_index(rng, static_cast<std::size_t>(n - i));
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
    }
    KeyLockLayout layout;
    layout.rows = params.size;
    layout.cols = params.size;
    layout.cells.assign(static_cast<std::size_t>(n), Cell::empty);
    int k = 0;
    layout.start_row = order[0] / params.size;
    layout.start_col = order[0] % params.size;
    ++k;
    auto place = [&](int count, Cell kind) {
      for (int i = 0; i < count; ++i) layout.cells[static_cast<std::size_t>(order[static_cast<std::size_t>(k++)])] = kind;
    };
    place(params.keys, Cell::key);
    place(params.locks, Cell::lock);
    place(params.pits, Cell::pit);
    place(params.obstacles, Cell::obstacle);
    if (plan(layout, kKeyLockMaxSteps).completable) return layout;
  }
  throw ContractError("key-lock layout: no solvable layout found");
}

Vector keylock_features(const KeyLockLayout& layout, const KeyLockState& state) {
  Vector f = Vector::Zero(kKeyLockFeatureWidth);
  auto cell_at = [&](int r, int c) { return state.cells[static_cast<std::size_t>(r * layout.cols + c)]; };
  for (int d = 0; d < 4; ++d) {
    const int nr = state.row + kDirRow[d];
    const int nc = state.col + kDirCol[d];
    bool found = false;
    const int key_d2 = nearest_distance_squared(state, layout.cols, Cell::key, nr, nc, found);
    f(d) = found ? std::sqrt(static_cast<double>(key_d2)) : 0.0;
    const int lock_d2 = nearest_distance_squared(state, layout.cols, Cell::lock, nr, nc, found);
    f(4 + d) = found ? std::sqrt(static_cast<double>(lock_d2)) : 0.0;

    const bool inside = layout.inside(nr, nc);
    f(8 + d) = (!inside || cell_at(nr, nc) == Cell::obstacle) ? 1.0 : 0.0;
    f(12 + d) = (inside && (cell_at(nr, nc) == Cell::key || cell_at(nr, nc) == Cell::lock)) ? 1.0 : 0.0;
    for (int reach = 1; reach <= 2; ++reach) {
      const int pr = state.row + reach * kDirRow[d];
      const int pc = state.col + reach * kDirCol[d];
      f(16 + 2 * d + (reach - 1)) = (layout.inside(pr, pc) && cell_at(pr, pc) == Cell::pit) ? 1.0 : 0.0;
    }
  }
  f(24) = state.keys_obtained;
  f(25) = state.locks_opened;
  return f;
}

KeyLockEnv::KeyLockEnv(KeyLockLayout layout) : layout_(std::move(layout)) {
  if (layout_.at(layout_.start_row, layout_.start_col) != Cell::empty)
    throw ContractError("key-lock layout: agent must start on an empty cell");
  optimum_ = keylock_optimal_return(layout_, kKeyLockMaxSteps);
  state_.cells = layout_.cells;
  state_.row = layout_.start_row;
  state_.col = layout_.start_col;
}

Vector KeyLockEnv::do_reset(std::uint64_t /*seed*/) {
  state_ = KeyLockState{layout_.cells, layout_.start_row, layout_.start_col, 0, 0};
  return keylock_features(layout_, state_);
}

Environment::Outcome KeyLockEnv::do_step(const Action& action) {
  const int* dir = std::get_if<int>(&action);
  if (!dir || *dir < 0 || *dir >= 4) throw ContractError("key-lock: action must be a direction index in [0, 4)");
  int nr = state_.row + kDirRow[*dir];
  int nc = state_.col + kDirCol[*dir];
  if (!layout_.inside(nr, nc) || layout_.at(nr, nc) == Cell::obstacle) {
    nr = state_.row;
    nc = state_.col;
  }
  state_.row = nr;
  state_.col = nc;
  Outcome out;
  out.reward = kStepReward;
  Cell& cell = state_.cells[static_cast<std::size_t>(nr * layout_.cols + nc)];
  if (cell == Cell::pit) {
    out.reward = kPitReward;
    out.terminal = true;
  } else if (cell == Cell::key) {
    cell = Cell::empty;
    ++state_.keys_obtained;
    out.reward = kKeyReward;
  } else if (cell == Cell::lock && state_.keys_obtained > state_.locks_opened) {
    cell = Cell::empty;
    ++state_.locks_opened;
    out.reward = kLockReward;
  }
  const int total_keys = layout_.count(Cell::key);
  const int total_locks = layout_.count(Cell::lock);
  if (state_.keys_obtained == total_keys && state_.locks_opened == total_locks) {
    out.terminal = true;
    out.success = true;
  }
  out.next_state = keylock_features(layout_, state_);
  return out;
}

std::string KeyLockEnv::render() const {
  std::string out;
  for (int r = 0; r < layout_.rows; ++r) {
    for (int c = 0; c < layout_.cols; ++c) {
      out.push_back(r == state_.row && c == state_.col
                        ? 'A'
                        : static_cast<char>(state_.cells[static_cast<std::size_t>(r * layout_.cols + c)]));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace cgr
