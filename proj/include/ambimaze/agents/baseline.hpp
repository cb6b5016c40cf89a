#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ambimaze/agents/policy.hpp"
#include "ambimaze/maze.hpp"
#include "ambimaze/percept.hpp"

namespace ambimaze {

// ---------------------------------------------------------------------------
// Random baseline
// ---------------------------------------------------------------------------

inline Action random_policy(Rng& rng) {
  return static_cast<Action>(uniform_index(rng, kActionCount));
}

class RandomAgent final : public Policy {
 public:
  Action act(const Observation&, Rng& rng) override { return random_policy(rng); }
};

// ---------------------------------------------------------------------------
// Scripted oracle
// ---------------------------------------------------------------------------

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::size_t pose_key(const Maze& maze, const EnvState& s) {
  const std::size_t cell = maze.spec().index(s.position);
  const std::size_t gates = (s.gate_closed[0] ? 1u : 0u) | (s.gate_closed[1] ? 2u : 0u);
  return (cell * kHeadingCount + static_cast<std::size_t>(s.heading)) * 4 + gates;
}

// Breadth-first search over poses (position, heading, gate status) using the
// environment's own motion rule. Returns the shortest action sequence from
// `start` to a pose satisfying `goal`, and that pose.
template <typename Goal, typename Avoid>
std::optional<std::pair<std::vector<Action>, EnvState>> bfs(const Maze& maze, const EnvState& start,
                                                            Goal goal, Avoid avoid) {
  if (goal(start)) return std::pair{std::vector<Action>{}, start};
  const std::size_t n = maze.spec().cells.size() * kHeadingCount * 4;
  std::vector<std::int32_t> parent(n, -1);
  std::vector<std::uint8_t> via(n, 0);
  std::vector<EnvState> states(n);
  std::deque<std::size_t> queue;
  const std::size_t root = pose_key(maze, start);
  parent[root] = static_cast<std::int32_t>(root);
  states[root] = start;
  queue.push_back(root);
  constexpr std::array<Action, 3> moves{Action::Forward, Action::TurnLeft, Action::TurnRight};
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    for (Action a : moves) {
      EnvState next = states[k];
      apply_motion(maze, next, a);
      if (avoid(next)) continue;
      const std::size_t nk = pose_key(maze, next);
      if (parent[nk] != -1) continue;
      parent[nk] = static_cast<std::int32_t>(k);
      via[nk] = static_cast<std::uint8_t>(a);
      states[nk] = next;
      if (goal(next)) {
        std::vector<Action> path;
        for (std::size_t cur = nk; cur != root; cur = static_cast<std::size_t>(parent[cur]))
          path.push_back(static_cast<Action>(via[cur]));
        std::reverse(path.begin(), path.end());
        return std::pair{std::move(path), next};
      }
      queue.push_back(nk);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// A pose discloses the context when the reward site (or a clue) is in view
// whichever context is active, so reaching it does not depend on the context.
inline bool discloses_context(const Maze& maze, EnvState s) {
  s.context = Side::Left;
  if (reward_visible(maze, s) != Side::Left) return false;
  s.context = Side::Right;
  return reward_visible(maze, s) == Side::Right;
}

struct DisclosurePlan {
  std::vector<Action> actions;
  EnvState pose;  // state reached once the context is in view
};

// Phase one: shortest route to a context-disclosing pose.
inline DisclosurePlan plan_disclosure(const Maze& maze, const EnvState& start) {
  auto found = detail::bfs(
      maze, start, [&](const EnvState& s) { return discloses_context(maze, s); },
      [&](const EnvState& s) { return is_reward(maze.at(s.position)); });
  if (!found) throw PlanningError("no pose from which the reward location can be seen");
  return {std::move(found->first), found->second};
}

// Phase two: shortest route from `start` to a reward site of `side`.
inline std::vector<Action> plan_to_reward(const Maze& maze, const EnvState& start, Side side) {
  auto found = detail::bfs(
      maze, start, [&](const EnvState& s) { return maze.at(s.position) == reward_of(side); },
      [](const EnvState&) { return false; });
  if (!found) throw PlanningError(std::string("the ") + to_string(side) + " reward site is unreachable");
  return std::move(found->first);
}

// Full plan for an episode whose context turns out to be `context`: walk
// to the disclosing pose, then to the revealed reward.
inline std::vector<Action> oracle_plan(const Maze& maze, Side context) {
  EnvState start = reset(maze, 0);
  start.context = context;
  DisclosurePlan first = plan_disclosure(maze, start);
  const auto seen = reward_visible(maze, first.pose);
  if (!seen) throw PlanningError("disclosing pose does not reveal the context");
  auto second = plan_to_reward(maze, first.pose, *seen);
  first.actions.insert(first.actions.end(), second.begin(), second.end());
  return std::move(first.actions);
}

// Executes the two-phase plan, only learning the side from what it observes.
class OracleAgent final : public Policy {
 public:
  void episode_start(const Observation& obs, const TrainingClock&) override {
    pending_.clear();
    cursor_ = 0;
    revealed_ = false;
    auto plan = plan_disclosure(*obs.maze, obs.state);
    pending_ = std::move(plan.actions);
  }

  Action act(const Observation& obs, Rng&) override {
    if (!revealed_ && cursor_ >= pending_.size()) {
      if (!obs.disclosed) throw PlanningError("oracle reached its disclosing pose without seeing the reward");
      pending_ = plan_to_reward(*obs.maze, obs.state, *obs.disclosed);
      cursor_ = 0;
      revealed_ = true;
    }
    if (cursor_ >= pending_.size()) return Action::Noop;
    return pending_[cursor_++];
  }

 private:
  std::vector<Action> pending_;
  std::size_t cursor_ = 0;
  bool revealed_ = false;
};

// ---------------------------------------------------------------------------
// Tabular Q-learning
// ---------------------------------------------------------------------------

enum class Belief : std::uint8_t { Unknown = 0, Left = 1, Right = 2 };

constexpr Belief belief_of(Side s) { return s == Side::Left ? Belief::Left : Belief::Right; }

// Unknown until the context is seen, then fixed for the episode.
class BeliefTracker {
 public:
  void reset() { belief_ = Belief::Unknown; }
  Belief update(std::optional<Side> disclosed) {
    if (belief_ == Belief::Unknown && disclosed) belief_ = belief_of(*disclosed);
    return belief_;
  }
  Belief value() const { return belief_; }

 private:
  Belief belief_ = Belief::Unknown;
};

using QValues = std::array<double, kActionCount>;

class QTable {
 public:
  QTable(double alpha = 0.1, double gamma = 0.99) : alpha_(alpha), gamma_(gamma) {}

  const QValues& values(std::uint64_t key) const {
    static const QValues zero{};
    auto it = table_.find(key);
    return it == table_.end() ? zero : it->second;
  }

  // Greedy action; ties go to the lowest action index.
  int greedy(std::uint64_t key) const {
    const QValues& q = values(key);
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
  }

  int act(std::uint64_t key, double epsilon, Rng& rng) const {
    if (epsilon > 0.0 && uniform01(rng) < epsilon) return static_cast<int>(uniform_index(rng, kActionCount));
    return greedy(key);
  }

  // One-step Q-learning backup; returns the TD error.
  double update(std::uint64_t key, int action, double reward, std::uint64_t next_key, bool done) {
    const QValues& next = values(next_key);
    const double bootstrap = done ? 0.0 : *std::max_element(next.begin(), next.end());
    QValues& q = table_[key];
    const double td = reward + gamma_ * bootstrap - q[static_cast<std::size_t>(action)];
    q[static_cast<std::size_t>(action)] += alpha_ * td;
    return td;
  }

  void set(std::uint64_t key, const QValues& v) { table_[key] = v; }
  std::size_t size() const { return table_.size(); }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  const std::unordered_map<std::uint64_t, QValues>& entries() const { return table_; }

 private:
  double alpha_;
  double gamma_;
  std::unordered_map<std::uint64_t, QValues> table_;
};

// Keys pack (col, row, heading, belief); the belief-free variant always
// stores Unknown.
struct TabularKey {
  int col = 0;
  int row = 0;
  Heading heading = Heading::N;
  Belief belief = Belief::Unknown;

  std::uint64_t pack() const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(col)) << 32) |
           (static_cast<std::uint64_t>(static_cast<std::uint16_t>(row)) << 16) |
           (static_cast<std::uint64_t>(heading) << 8) | static_cast<std::uint64_t>(belief);
  }
  static TabularKey unpack(std::uint64_t k) {
    return {static_cast<int>(k >> 32), static_cast<int>((k >> 16) & 0xffff),
            static_cast<Heading>((k >> 8) & 0xff), static_cast<Belief>(k & 0xff)};
  }
};

struct TabularConfig {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;
  bool belief_augmented = false;
  // Reverse-order sweeps over the finished episode's transitions, applied
  // with the same backup as the online update.
  std::size_t replay_sweeps = 0;
  // Value the agent writes into a key's row the first time it meets the
  // key. 0 leaves the table exactly as the plain update rule would.
  double initial_value = 0.0;
};

class TabularQAgent final : public Policy {
 public:
  explicit TabularQAgent(TabularConfig config = {})
      : config_(config), table_(config.alpha, config.gamma) {}

  void episode_start(const Observation& obs, const TrainingClock& clock) override {
    tracker_.reset();
    tracker_.update(obs.disclosed);
    epsilon_ = linear_schedule(config_.epsilon_start, config_.epsilon_end, config_.epsilon_decay_fraction, clock.progress);
  }

  Action act(const Observation& obs, Rng& rng) override {
    const std::uint64_t key = key_for(obs.state, tracker_.value());
    seed_row(key);
    return static_cast<Action>(table_.act(key, epsilon_, rng));
  }

  void observe(const Transition& t) override {
    const std::uint64_t key = key_for(t.before.state, tracker_.value());
    const Belief next_belief = tracker_.update(t.after.disclosed);
    const std::uint64_t next_key = key_for(t.after.state, next_belief);
    const int a = to_index(t.action);
    const double reward = t.reward;
    seed_row(key);
    seed_row(next_key);
    table_.update(key, a, reward, next_key, t.terminated);
    if (config_.replay_sweeps > 0) episode_.push_back({key, a, reward, next_key, t.terminated});
  }

  void episode_end() override {
    for (std::size_t sweep = 0; sweep < config_.replay_sweeps; ++sweep)
      for (auto it = episode_.rbegin(); it != episode_.rend(); ++it)
        table_.update(it->key, it->action, it->reward, it->next_key, it->done);
    episode_.clear();
  }

  std::uint64_t key_for(const EnvState& s, Belief b) const {
    return TabularKey{s.position.col, s.position.row, s.heading,
                      config_.belief_augmented ? b : Belief::Unknown}
        .pack();
  }

  double epsilon() const { return epsilon_; }
  Belief belief() const { return tracker_.value(); }
  const QTable& table() const { return table_; }
  QTable& table() { return table_; }
  const TabularConfig& config() const { return config_; }

 private:
  TabularConfig config_;
  QTable table_;
  void seed_row(std::uint64_t key) {
    if (config_.initial_value != 0.0 && !table_.entries().count(key)) {
      QValues v;
      v.fill(config_.initial_value);
      table_.set(key, v);
    }
  }

  struct Backup {
    std::uint64_t key;
    int action;
    double reward;
    std::uint64_t next_key;
    bool done;
  };

  BeliefTracker tracker_;
  double epsilon_ = 1.0;
  std::vector<Backup> episode_;
};

// ---------------------------------------------------------------------------
// Q-table checkpoint: one row per key, "col,row,heading,belief q0 q1 q2 q3"
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr std::array<char, 3> kBeliefCodes{'U', 'L', 'R'};

inline std::string format_q(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
}  // namespace detail

inline std::string serialize_qtable(const QTable& table) {
  std::map<std::uint64_t, QValues> sorted(table.entries().begin(), table.entries().end());
  std::string out;
  for (const auto& [key, q] : sorted) {
    const TabularKey k = TabularKey::unpack(key);
    out += std::to_string(k.col) + "," + std::to_string(k.row) + "," + std::string(to_string(k.heading)) + "," +
           detail::kBeliefCodes[static_cast<std::size_t>(k.belief)];
    for (double v : q) out += " " + detail::format_q(v);
    out += "\n";
  }
  return out;
}

inline QTable parse_qtable(const std::string& text, double alpha = 0.1, double gamma = 0.99) {
  QTable table(alpha, gamma);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string key;
    QValues q{};
    row >> key >> q[0] >> q[1] >> q[2] >> q[3];
    std::string rest;
    if (!row || (row >> rest)) throw std::runtime_error("q-table line " + std::to_string(lineno) + ": malformed row");
    std::array<std::string, 4> parts;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t comma = key.find(',', pos);
      parts[i] = key.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? key.size() : comma + 1;
    }
    auto heading = heading_from_string(parts[2]);
    const auto b = std::find(detail::kBeliefCodes.begin(), detail::kBeliefCodes.end(),
                             parts[3].size() == 1 ? parts[3][0] : '?');
    if (!heading || b == detail::kBeliefCodes.end())
      throw std::runtime_error("q-table line " + std::to_string(lineno) + ": malformed key");
    TabularKey k{std::stoi(parts[0]), std::stoi(parts[1]), *heading,
                 static_cast<Belief>(b - detail::kBeliefCodes.begin())};
    table.set(k.pack(), q);
  }
  return table;
}

}  // namespace ambimaze
