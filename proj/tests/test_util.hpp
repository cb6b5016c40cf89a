#pragma once

#include <deque>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ambimaze/map_format.hpp"
#include "ambimaze/maze.hpp"

namespace testutil {

inline ambimaze::MazeSpec grid(const std::vector<std::string>& rows, const std::string& header = "") {
  std::string text = header.empty() ? "" : header + "\n\n";
  for (const auto& r : rows) text += r + "\n";
  return ambimaze::parse_map(text);
}

// A small T-maze: spawn at the bottom, gates at the junction, rewards at
// both ends.
inline ambimaze::MazeSpec small_t() {
  return grid({
      "###########",
      "#L..[.]..R#",
      "#####.#####",
      "#####.#####",
      "#####S#####",
      "###########",
  });
}

using PoseKey = std::tuple<int, int, int, bool, bool>;

inline PoseKey key_of(const ambimaze::EnvState& s) {
  return {s.position.col, s.position.row, static_cast<int>(s.heading), s.gate_closed[0], s.gate_closed[1]};
}

// Every position reachable from `start` by any action sequence, ignoring
// the move budget and termination. Explores with step() itself.
inline std::set<std::pair<int, int>> reachable_positions(const ambimaze::Maze& maze, ambimaze::EnvState start) {
  using namespace ambimaze;
  start.steps_taken = 0;
  start.terminated = start.truncated = false;
  std::set<PoseKey> seen{key_of(start)};
  std::deque<EnvState> queue{start};
  std::set<std::pair<int, int>> cells{{start.position.col, start.position.row}};
  while (!queue.empty()) {
    EnvState s = queue.front();
    queue.pop_front();
    for (Action a : kAllActions) {
      EnvState probe = s;
      probe.steps_taken = 0;
      probe.terminated = probe.truncated = false;
      EnvState next = step(maze, probe, a).first;
      next.steps_taken = 0;
      next.terminated = next.truncated = false;
      if (seen.insert(key_of(next)).second) {
        cells.insert({next.position.col, next.position.row});
        queue.push_back(next);
      }
    }
  }
  return cells;
}

}  // namespace testutil
