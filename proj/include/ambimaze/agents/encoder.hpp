#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ambimaze/agents/policy.hpp"
#include "ambimaze/percept.hpp"

namespace ambimaze {

enum class EncoderMode { Compact, Pixel21 };

inline EncoderMode encoder_mode_from_string(std::string_view s) {
  if (s == "compact") return EncoderMode::Compact;
  if (s == "pixel21") return EncoderMode::Pixel21;
  throw std::invalid_argument("unknown encoder '" + std::string(s) + "' (expected compact or pixel21)");
}

inline constexpr int kPixel21Side = 21;

// Turns an observation into a flat feature vector.
//   compact: one-hot cell + one-hot heading + {none, left, right} disclosure flag
//   pixel21: render -> 84x84 grayscale -> 21x21 area average
class ObsEncoder {
 public:
  ObsEncoder(EncoderMode mode, const Maze& maze) : mode_(mode), cells_(maze.spec().cells.size()) {}

  EncoderMode mode() const { return mode_; }

  std::size_t size() const {
    return mode_ == EncoderMode::Compact ? cells_ + kHeadingCount + 3
                                         : static_cast<std::size_t>(kPixel21Side * kPixel21Side);
  }

  void encode(const Observation& obs, std::vector<double>& out) const {
    out.assign(size(), 0.0);
    if (mode_ == EncoderMode::Compact) {
      out[obs.maze->spec().index(obs.state.position)] = 1.0;
      out[cells_ + static_cast<std::size_t>(obs.state.heading)] = 1.0;
      const std::size_t flag = obs.disclosed ? 1 + index_of(*obs.disclosed) : 0;
      out[cells_ + kHeadingCount + flag] = 1.0;
      return;
    }
    const GrayImage small = resize_area(preprocess(render(*obs.maze, obs.state)), kPixel21Side, kPixel21Side);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = small.values[i];
  }

  std::vector<double> encode(const Observation& obs) const {
    std::vector<double> out;
    encode(obs, out);
    return out;
  }

 private:
  EncoderMode mode_;
  std::size_t cells_;
};

// Minimal episodic task over flat observations, so the learners can be
// exercised on the maze and on small test problems alike.
struct TaskStep {
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

class EpisodicTask {
 public:
  virtual ~EpisodicTask() = default;
  virtual std::size_t observation_size() const = 0;
  virtual int action_count() const = 0;
  virtual void reset(std::vector<double>& obs) = 0;
  virtual TaskStep step(int action, std::vector<double>& obs) = 0;
  // Steps taken in the current episode.
  virtual int episode_steps() const = 0;
};

// The maze behind the EpisodicTask interface.
class MazeTask final : public EpisodicTask {
 public:
  MazeTask(const Maze& maze, EncoderMode mode, std::uint64_t seed)
      : env_(maze, seed), encoder_(mode, maze) {}

  std::size_t observation_size() const override { return encoder_.size(); }
  int action_count() const override { return kActionCount; }

  void reset(std::vector<double>& obs) override {
    env_.reset();
    encoder_.encode(ambimaze::observe(env_.maze(), env_.state()), obs);
  }

  TaskStep step(int action, std::vector<double>& obs) override {
    const StepResult r = env_.step(action_from_index(action));
    encoder_.encode(ambimaze::observe(env_.maze(), env_.state()), obs);
    return {static_cast<double>(r.reward), r.terminated, r.truncated};
  }

  int episode_steps() const override { return env_.state().steps_taken; }
  const Environment& environment() const { return env_; }

 private:
  Environment env_;
  ObsEncoder encoder_;
};

}  // namespace ambimaze
