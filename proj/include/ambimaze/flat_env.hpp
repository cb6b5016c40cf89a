#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambimaze/map_format.hpp"
#include "ambimaze/maze.hpp"
#include "ambimaze/percept.hpp"

namespace ambimaze {

// reset/step over flat buffers and scalars, for wrapping from other
// languages. Holds no maze logic of its own.

enum class ObsMode { Processed, Raw };

struct FlatEnvOptions {
  std::optional<double> fov;
  std::optional<int> max_moves;
  std::uint64_t seed = 0;
  ObsMode mode = ObsMode::Processed;
};

struct FlatObs {
  std::vector<float> values;         // Processed: 84*84 intensities in [0,1]
  std::vector<std::uint8_t> pixels;  // Raw: row-major RGB
  int height = 0;
  int width = 0;
  int channels = 0;
};

struct FlatStep {
  FlatObs obs;
  double reward = 0;
  bool terminated = false;
  bool truncated = false;
};

class FlatEnv {
 public:
  // `source` is a map path or "default".
  static FlatEnv make(const std::string& source, const FlatEnvOptions& options = {}) {
    MazeSpec spec = source == "default" ? generate_emaze() : load_map(source);
    if (options.fov) spec.fov = *options.fov;
    if (options.max_moves) spec.max_moves = *options.max_moves;
    return FlatEnv(std::make_unique<Maze>(std::move(spec)), options);
  }

  FlatObs reset() {
    env_.reset();
    return observation();
  }

  FlatStep step(int action) {
    if (action < 0 || action >= kActionCount)
      throw std::invalid_argument("action " + std::to_string(action) + " is not one of 0 (noop), 1 (forward), 2 (left), 3 (right)");
    const StepResult r = env_.step(static_cast<Action>(action));
    return {observation(), static_cast<double>(r.reward), r.terminated, r.truncated};
  }

  Frame render() const { return ambimaze::render(*maze_, env_.state()); }

  FlatObs observation() const {
    FlatObs o;
    const Frame f = render();
    if (mode_ == ObsMode::Raw) {
      o.pixels = f.pixels;
      o.height = f.height_px;
      o.width = f.width_px;
      o.channels = 3;
    } else {
      o.values = preprocess(f).values;
      o.height = o.width = kObsSide;
      o.channels = 1;
    }
    return o;
  }

  const EnvState& state() const { return env_.state(); }
  const Maze& maze() const { return *maze_; }

 private:
  FlatEnv(std::unique_ptr<Maze> maze, const FlatEnvOptions& options)
      : maze_(std::move(maze)), env_(*maze_, options.seed), mode_(options.mode) {}

  std::unique_ptr<Maze> maze_;
  Environment env_;
  ObsMode mode_;
};

}  // namespace ambimaze
