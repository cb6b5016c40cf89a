#pragma once

#include <optional>

#include "ambimaze/maze.hpp"
#include "ambimaze/percept.hpp"
#include "ambimaze/rng.hpp"

namespace ambimaze {

// What an agent gets to look at on each step. Tabular and scripted agents
// read the pose directly; pixel agents render from it.
struct Observation {
  const Maze* maze = nullptr;
  EnvState state;
  std::optional<Side> disclosed;  // reward_visible at this state
};

inline Observation observe(const Maze& maze, const EnvState& state) {
  return {&maze, state, reward_visible(maze, state)};
}

struct Transition {
  const Observation& before;
  Action action;
  int reward;
  const Observation& after;
  bool terminated;
  bool truncated;
};

// Fraction of the training budget already consumed, in [0, 1]; drives
// annealed exploration schedules.
struct TrainingClock {
  double progress = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Observation& obs, Rng& rng) = 0;
  virtual void observe(const Transition&) {}
  virtual void episode_start(const Observation&, const TrainingClock&) {}
  virtual void episode_end() {}
};

// Linear interpolation over the first `fraction` of training.
inline double linear_schedule(double start, double end, double fraction, double progress) {
  if (fraction <= 0.0 || progress >= fraction) return end;
  return start + (end - start) * (progress / fraction);
}

}  // namespace ambimaze
