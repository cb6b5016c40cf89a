#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ambimaze/rng.hpp"

namespace ambimaze {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Diagnostic {
  int line = 0;    // 1-based; for programmatic specs this is the grid row + 1
  int column = 0;  // 1-based
  std::string message;

  std::string to_string() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }
  bool operator==(const Diagnostic&) const = default;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& ds) {
    std::string out = "invalid maze";
    for (const auto& d : ds) out += "\n  " + d.to_string();
    return out;
  }
  std::vector<Diagnostic> diagnostics_;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Side : std::uint8_t { Left = 0, Right = 1 };

constexpr Side opposite(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
constexpr std::size_t index_of(Side s) { return static_cast<std::size_t>(s); }
constexpr const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

enum class CellKind : std::uint8_t {
  Floor,
  Wall,
  Window,
  GateLeft,
  GateRight,
  RewardLeft,
  RewardRight,
  Clue,
  Spawn,
};

constexpr bool is_passable(CellKind k) {
  return k != CellKind::Wall && k != CellKind::Window;
}
constexpr bool is_gate(CellKind k) {
  return k == CellKind::GateLeft || k == CellKind::GateRight;
}
constexpr bool is_reward(CellKind k) {
  return k == CellKind::RewardLeft || k == CellKind::RewardRight;
}
constexpr std::optional<Side> gate_side(CellKind k) {
  if (k == CellKind::GateLeft) return Side::Left;
  if (k == CellKind::GateRight) return Side::Right;
  return std::nullopt;
}
constexpr std::optional<Side> reward_side(CellKind k) {
  if (k == CellKind::RewardLeft) return Side::Left;
  if (k == CellKind::RewardRight) return Side::Right;
  return std::nullopt;
}
constexpr CellKind gate_of(Side s) {
  return s == Side::Left ? CellKind::GateLeft : CellKind::GateRight;
}
constexpr CellKind reward_of(Side s) {
  return s == Side::Left ? CellKind::RewardLeft : CellKind::RewardRight;
}

// Eight compass headings in clockwise order; rows grow downward (south).
enum class Heading : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr int kHeadingCount = 8;

constexpr Heading turn_left(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + kHeadingCount - 1) % kHeadingCount);
}
constexpr Heading turn_right(Heading h) {
  return static_cast<Heading>((static_cast<int>(h) + 1) % kHeadingCount);
}
constexpr bool is_diagonal(Heading h) { return static_cast<int>(h) % 2 == 1; }

struct Offset {
  int dx;
  int dy;
};

constexpr Offset offset_of(Heading h) {
  constexpr std::array<Offset, kHeadingCount> table{{
      {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1},
  }};
  return table[static_cast<std::size_t>(h)];
}

// Angle of the heading measured clockwise from north, in radians.
constexpr double heading_angle(Heading h) {
  return static_cast<double>(static_cast<int>(h)) * std::numbers::pi / 4.0;
}

inline constexpr std::array<std::string_view, kHeadingCount> kHeadingNames{
    "N", "NE", "E", "SE", "S", "SW", "W", "NW"};

constexpr std::string_view to_string(Heading h) {
  return kHeadingNames[static_cast<std::size_t>(h)];
}

inline std::optional<Heading> heading_from_string(std::string_view s) {
  for (int i = 0; i < kHeadingCount; ++i)
    if (kHeadingNames[static_cast<std::size_t>(i)] == s) return static_cast<Heading>(i);
  return std::nullopt;
}

enum class Action : std::uint8_t { Noop = 0, Forward = 1, TurnLeft = 2, TurnRight = 3 };

inline constexpr int kActionCount = 4;
inline constexpr std::array<Action, kActionCount> kAllActions{
    Action::Noop, Action::Forward, Action::TurnLeft, Action::TurnRight};

constexpr int to_index(Action a) { return static_cast<int>(a); }

inline Action action_from_index(int i) {
  if (i < 0 || i >= kActionCount)
    throw std::out_of_range("action index " + std::to_string(i) + " outside [0, 4)");
  return static_cast<Action>(i);
}

struct Cell {
  int col = 0;
  int row = 0;
  bool operator==(const Cell&) const = default;
};

inline constexpr double kDefaultFov = 1.1 * std::numbers::pi;
inline constexpr int kDefaultMaxMoves = 250;
inline constexpr int kDefaultCellPx = 8;

// Static maze description.
struct MazeSpec {
  int width = 0;
  int height = 0;
  std::vector<CellKind> cells;  // row-major, width * height
  Cell spawn_position;
  Heading spawn_heading = Heading::N;
  double fov = kDefaultFov;
  int max_moves = kDefaultMaxMoves;
  int cell_px = kDefaultCellPx;

  bool in_bounds(Cell c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t i) const {
    return {static_cast<int>(i % static_cast<std::size_t>(width)),
            static_cast<int>(i / static_cast<std::size_t>(width))};
  }
  CellKind at(Cell c) const { return cells[index(c)]; }
  CellKind& at(Cell c) { return cells[index(c)]; }

  bool operator==(const MazeSpec&) const = default;
};

// Dynamic episode state.
struct EnvState {
  Cell position;
  Heading heading = Heading::N;
  Side context = Side::Left;
  std::array<bool, 2> gate_closed{false, false};
  int steps_taken = 0;
  bool terminated = false;
  bool truncated = false;

  bool done() const { return terminated || truncated; }
  bool operator==(const EnvState&) const = default;
};

struct StepResult {
  int reward = 0;
  bool terminated = false;
  bool truncated = false;
  bool operator==(const StepResult&) const = default;
};

// ---------------------------------------------------------------------------
// Validation and derived topology
// ---------------------------------------------------------------------------

namespace detail {

inline Diagnostic at_cell(Cell c, std::string message) {
  return {c.row + 1, c.col + 1, std::move(message)};
}

// Flood fill over the movement graph (8-way, no corner cutting) starting at
// `seeds`, never entering cells for which `blocked` returns true. Gates count
// as passable for the corner rule.
template <typename Blocked>
std::vector<bool> flood(const MazeSpec& spec, const std::vector<Cell>& seeds, Blocked blocked) {
  std::vector<bool> seen(spec.cells.size(), false);
  std::deque<Cell> queue;
  for (Cell s : seeds) {
    if (!seen[spec.index(s)]) {
      seen[spec.index(s)] = true;
      queue.push_back(s);
    }
  }
  auto open = [&](Cell c) { return spec.in_bounds(c) && is_passable(spec.at(c)); };
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int h = 0; h < kHeadingCount; ++h) {
      const Offset o = offset_of(static_cast<Heading>(h));
      const Cell t{c.col + o.dx, c.row + o.dy};
      if (!open(t) || blocked(t) || seen[spec.index(t)]) continue;
      if (o.dx != 0 && o.dy != 0 &&
          (!open({c.col + o.dx, c.row}) || !open({c.col, c.row + o.dy})))
        continue;
      seen[spec.index(t)] = true;
      queue.push_back(t);
    }
  }
  return seen;
}

}  // namespace detail

// Returns every violated invariant; empty when the spec is valid.
inline std::vector<Diagnostic> validate(const MazeSpec& spec) {
  std::vector<Diagnostic> out;
  if (spec.width < 1 || spec.height < 1) {
    out.push_back({1, 1, "grid must be at least 1x1"});
    return out;
  }
  if (spec.cells.size() != static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height)) {
    out.push_back({1, 1, "cell count does not match width * height"});
    return out;
  }
  if (!(spec.fov > 0.0 && spec.fov <= 2.0 * std::numbers::pi))
    out.push_back({1, 1, "fov must lie in (0, 2pi]"});
  if (spec.max_moves < 1) out.push_back({1, 1, "max_moves must be at least 1"});
  if (spec.cell_px < 1) out.push_back({1, 1, "cell_px must be at least 1"});

  std::vector<Cell> spawns;
  std::array<std::vector<Cell>, 2> rewards;
  for (std::size_t i = 0; i < spec.cells.size(); ++i) {
    const CellKind k = spec.cells[i];
    if (k == CellKind::Spawn) spawns.push_back(spec.cell_at(i));
    if (auto s = reward_side(k)) rewards[index_of(*s)].push_back(spec.cell_at(i));
  }
  if (spawns.empty()) out.push_back({1, 1, "no spawn cell"});
  for (std::size_t i = 1; i < spawns.size(); ++i)
    out.push_back(detail::at_cell(spawns[i], "multiple spawn cells"));
  if (spawns.size() == 1 && !(spawns[0] == spec.spawn_position))
    out.push_back(detail::at_cell(spawns[0], "spawn_position does not match the spawn cell"));
  for (Side s : {Side::Left, Side::Right})
    if (rewards[index_of(s)].empty())
      out.push_back({1, 1, std::string("missing ") + to_string(s) + " reward site"});
  if (spawns.size() != 1 || rewards[0].empty() || rewards[1].empty()) return out;

  for (Side s : {Side::Left, Side::Right}) {
    // Reward sites of side s must be unreachable once its gates are removed.
    const CellKind gate = gate_of(s);
    const auto reach = detail::flood(spec, {spawns[0]}, [&](Cell c) { return spec.at(c) == gate; });
    for (Cell r : rewards[index_of(s)])
      if (reach[spec.index(r)])
        out.push_back(detail::at_cell(r, std::string("unguarded reward region (") + to_string(s) +
                                             " reward reachable without a " + to_string(s) + " gate)"));
    // The branch interior may only border gates of its own side.
    const auto branch = detail::flood(spec, rewards[index_of(s)], [&](Cell c) { return is_gate(spec.at(c)); });
    for (std::size_t i = 0; i < spec.cells.size(); ++i) {
      if (!branch[i]) continue;
      const Cell c = spec.cell_at(i);
      if (spec.at(c) == CellKind::Spawn) {
        out.push_back(detail::at_cell(c, std::string("spawn lies inside the ") + to_string(s) + " branch"));
        continue;
      }
      for (int h = 0; h < kHeadingCount; ++h) {
        const Offset o = offset_of(static_cast<Heading>(h));
        const Cell t{c.col + o.dx, c.row + o.dy};
        if (!spec.in_bounds(t)) continue;
        const auto gs = gate_side(spec.at(t));
        if (gs && *gs != s)
          out.push_back(detail::at_cell(t, std::string("gate borders the ") + to_string(s) + " branch from the wrong side"));
      }
    }
  }
  return out;
}

// A validated MazeSpec together with topology derived from it. All
// environment operations run against a Maze.
class Maze {
 public:
  explicit Maze(MazeSpec spec) : spec_(std::move(spec)) {
    if (auto diags = validate(spec_); !diags.empty()) throw ValidationError(std::move(diags));
    branch_.assign(spec_.cells.size(), std::nullopt);
    for (Side s : {Side::Left, Side::Right}) {
      std::vector<Cell> seeds;
      for (std::size_t i = 0; i < spec_.cells.size(); ++i)
        if (spec_.cells[i] == reward_of(s)) {
          seeds.push_back(spec_.cell_at(i));
          reward_cells_[index_of(s)].push_back(spec_.cell_at(i));
        }
      const auto region = detail::flood(spec_, seeds, [&](Cell c) { return is_gate(spec_.at(c)); });
      for (std::size_t i = 0; i < region.size(); ++i)
        if (region[i]) branch_[i] = s;
    }
    for (std::size_t i = 0; i < spec_.cells.size(); ++i)
      if (spec_.cells[i] == CellKind::Clue) clue_cells_.push_back(spec_.cell_at(i));
  }

  const MazeSpec& spec() const noexcept { return spec_; }
  int width() const noexcept { return spec_.width; }
  int height() const noexcept { return spec_.height; }
  CellKind at(Cell c) const { return spec_.at(c); }
  bool in_bounds(Cell c) const { return spec_.in_bounds(c); }

  // Side of the branch interior the cell belongs to (gates excluded).
  std::optional<Side> branch_of(Cell c) const { return branch_[spec_.index(c)]; }

  const std::vector<Cell>& reward_cells(Side s) const { return reward_cells_[index_of(s)]; }
  const std::vector<Cell>& clue_cells() const { return clue_cells_; }

 private:
  MazeSpec spec_;
  std::vector<std::optional<Side>> branch_;
  std::array<std::vector<Cell>, 2> reward_cells_;
  std::vector<Cell> clue_cells_;
};

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

// Passable for the agent right now: in bounds, not wall/window, not a closed gate.
inline bool is_open(const Maze& maze, const EnvState& state, Cell c) {
  if (!maze.in_bounds(c)) return false;
  const CellKind k = maze.at(c);
  if (!is_passable(k)) return false;
  if (auto s = gate_side(k)) return !state.gate_closed[index_of(*s)];
  return true;
}

// Destination of a Forward move along `heading`, or nothing when blocked.
inline std::optional<Cell> legal_target(const Maze& maze, const EnvState& state, Heading heading) {
  const Offset o = offset_of(heading);
  const Cell p = state.position;
  const Cell t{p.col + o.dx, p.row + o.dy};
  if (!is_open(maze, state, t)) return std::nullopt;
  if (o.dx != 0 && o.dy != 0 &&
      (!is_open(maze, state, {p.col + o.dx, p.row}) || !is_open(maze, state, {p.col, p.row + o.dy})))
    return std::nullopt;
  return t;
}

// Applies the pose part of an action (movement, turning, gate closing)
// without touching the step counter or reward.
inline void apply_motion(const Maze& maze, EnvState& state, Action action) {
  switch (action) {
    case Action::Noop:
      break;
    case Action::TurnLeft:
      state.heading = turn_left(state.heading);
      break;
    case Action::TurnRight:
      state.heading = turn_right(state.heading);
      break;
    case Action::Forward:
      if (auto target = legal_target(maze, state, state.heading)) {
        const auto from_gate = gate_side(maze.at(state.position));
        if (from_gate && maze.branch_of(*target) == from_gate)
          state.gate_closed[index_of(*from_gate)] = true;
        state.position = *target;
      }
      break;
  }
}

inline EnvState reset(const Maze& maze, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  EnvState s;
  s.position = maze.spec().spawn_position;
  s.heading = maze.spec().spawn_heading;
  s.context = coin_flip(rng) ? Side::Right : Side::Left;
  return s;
}

inline EnvState reset(const MazeSpec& spec, std::uint64_t seed) { return reset(Maze(spec), seed); }

inline std::pair<EnvState, StepResult> step(const Maze& maze, EnvState state, Action action) {
  if (state.done()) throw ContractViolation("step called on a finished episode");
  apply_motion(maze, state, action);
  state.steps_taken += 1;
  StepResult result;
  if (maze.at(state.position) == reward_of(state.context)) {
    state.terminated = true;
    result.reward = 1;
    result.terminated = true;
  } else if (state.steps_taken >= maze.spec().max_moves) {
    state.truncated = true;
    result.truncated = true;
  }
  return {state, result};
}

// Owns a maze reference, a state, and the per-episode seed stream.
class Environment {
 public:
  Environment(const Maze& maze, std::uint64_t seed) : maze_(&maze), seed_(seed) {}

  const EnvState& reset() {
    state_ = ambimaze::reset(*maze_, derive_seed(seed_, episode_++));
    return state_;
  }

  StepResult step(Action action) {
    auto [next, result] = ambimaze::step(*maze_, state_, action);
    state_ = next;
    return result;
  }

  const EnvState& state() const noexcept { return state_; }
  const Maze& maze() const noexcept { return *maze_; }
  std::uint64_t episodes_started() const noexcept { return episode_; }

 private:
  const Maze* maze_;
  std::uint64_t seed_;
  std::uint64_t episode_ = 0;
  EnvState state_;
};

}  // namespace ambimaze
