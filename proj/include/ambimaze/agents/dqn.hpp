#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ambimaze/agents/encoder.hpp"
#include "ambimaze/agents/policy.hpp"
#include "ambimaze/nn.hpp"

namespace ambimaze {

struct StoredTransition {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

// Fixed-capacity ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t min_history) : capacity_(capacity), min_history_(min_history) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  void push(StoredTransition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t min_history() const { return min_history_; }
  bool ready() const { return items_.size() >= min_history_; }

  std::vector<const StoredTransition*> sample(std::size_t batch, Rng& rng) const {
    if (!ready())
      throw std::logic_error("replay buffer: sampling before min_history (" + std::to_string(items_.size()) + " < " +
                             std::to_string(min_history_) + ")");
    std::vector<const StoredTransition*> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) out.push_back(&items_[uniform_index(rng, items_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t min_history_;
  std::size_t head_ = 0;
  std::vector<StoredTransition> items_;
};

struct DqnConfig {
  double learning_rate = 2.5e-4;
  nn::OptimizerKind optimizer = nn::OptimizerKind::RmsProp;
  std::size_t batch_size = 32;
  std::size_t min_history = 2000;
  std::size_t replay_capacity = 100000;
  std::size_t steps_per_phase = 250;  // env steps collected between training phases
  std::size_t update_period = 4;      // env steps per gradient step within a phase
  std::size_t target_sync_interval = 500;  // gradient steps
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  double epsilon_decay_fraction = 0.4;
  std::vector<std::size_t> hidden{64, 64};

  // Values used for the Atari benchmark runs.
  static DqnConfig paper_scale() {
    DqnConfig c;
    c.min_history = 20000;
    c.steps_per_phase = 2500;
    c.replay_capacity = 1000000;
    return c;
  }
};

// Q-network, target network, replay and the training rule; independent of
// where observations come from.
class DqnLearner {
 public:
  DqnLearner(std::size_t obs_size, int actions, DqnConfig config, std::uint64_t seed)
      : config_(config),
        actions_(actions),
        online_(layer_sizes(obs_size), activations()),
        target_(layer_sizes(obs_size), activations()),
        optimizer_({config.optimizer, config.learning_rate, 0.9, 0.999, 0.95,
                    config.optimizer == nn::OptimizerKind::RmsProp ? 1e-5 : 1e-8}),
        buffer_(config.replay_capacity, config.min_history),
        rng_(make_rng(derive_seed(seed, 0xd0))) {
    online_.init_default(derive_seed(seed, 1));
    target_.copy_parameters_from(online_);
  }

  std::vector<double> q_values(std::span<const double> obs) const { return online_.forward(obs); }
  std::vector<double> target_values(std::span<const double> obs) const { return target_.forward(obs); }

  int greedy(std::span<const double> obs) const {
    const auto q = q_values(obs);
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
  }

  int act(std::span<const double> obs, double epsilon, Rng& rng) const {
    if (uniform01(rng) < epsilon) return static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(actions_)));
    return greedy(obs);
  }

  // Stores a transition; runs a training phase every steps_per_phase steps
  // once the buffer holds min_history transitions. Returns the phase's mean
  // loss when one ran.
  std::optional<double> record(StoredTransition t) {
    buffer_.push(std::move(t));
    ++env_steps_;
    if (env_steps_ % config_.steps_per_phase != 0 || !buffer_.ready()) return std::nullopt;
    const std::size_t updates = std::max<std::size_t>(1, config_.steps_per_phase / config_.update_period);
    double total = 0;
    for (std::size_t i = 0; i < updates; ++i) total += train_step();
    return total / static_cast<double>(updates);
  }

  // One gradient step on a uniformly sampled batch; returns the batch MSE.
  double train_step() {
    const auto batch = buffer_.sample(config_.batch_size, rng_);
    auto grads = online_.zero_gradients();
    nn::Mlp::Cache cache;
    double loss = 0;
    std::vector<double> dq(static_cast<std::size_t>(actions_));
    for (const StoredTransition* t : batch) {
      const double y = td_target(*t);
      online_.forward(t->obs, cache);
      const double q = cache.values.back()[static_cast<std::size_t>(t->action)];
      const double err = q - y;
      loss += err * err;
      std::fill(dq.begin(), dq.end(), 0.0);
      dq[static_cast<std::size_t>(t->action)] = 2.0 * err / static_cast<double>(batch.size());
      online_.backward(cache, dq, grads);
    }
    optimizer_.step(online_, grads);
    ++gradient_steps_;
    if (gradient_steps_ % config_.target_sync_interval == 0) target_.copy_parameters_from(online_);
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss)) throw std::runtime_error("dqn: non-finite loss");
    return loss;
  }

  // y = r + gamma * (1 - done) * max_a' Q_target(s', a')
  double td_target(const StoredTransition& t) const {
    if (t.done) return t.reward;
    const auto next = target_.forward(t.next_obs);
    return t.reward + config_.gamma * *std::max_element(next.begin(), next.end());
  }

  const DqnConfig& config() const { return config_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  ReplayBuffer& buffer() { return buffer_; }
  const nn::Mlp& online() const { return online_; }
  nn::Mlp& online() { return online_; }
  const nn::Mlp& target() const { return target_; }
  std::size_t gradient_steps() const { return gradient_steps_; }
  int action_count() const { return actions_; }

 private:
  std::vector<std::size_t> layer_sizes(std::size_t obs) const {
    std::vector<std::size_t> s{obs};
    s.insert(s.end(), config_.hidden.begin(), config_.hidden.end());
    s.push_back(static_cast<std::size_t>(actions_));
    return s;
  }
  std::vector<nn::Activation> activations() const {
    std::vector<nn::Activation> a(config_.hidden.size(), nn::Activation::Relu);
    a.push_back(nn::Activation::Identity);
    return a;
  }

  DqnConfig config_;
  int actions_;
  nn::Mlp online_;
  nn::Mlp target_;
  nn::Optimizer<double> optimizer_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::size_t env_steps_ = 0;
  std::size_t gradient_steps_ = 0;
};

// DQN on the maze through an observation encoder.
class DqnAgent final : public Policy {
 public:
  DqnAgent(const Maze& maze, EncoderMode mode, DqnConfig config, std::uint64_t seed)
      : encoder_(mode, maze), learner_(encoder_.size(), kActionCount, config, seed) {}

  void episode_start(const Observation& obs, const TrainingClock& clock) override {
    const auto& c = learner_.config();
    epsilon_ = linear_schedule(c.epsilon_start, c.epsilon_end, c.epsilon_decay_fraction, clock.progress);
    encoder_.encode(obs, current_);
  }

  Action act(const Observation&, Rng& rng) override {
    return static_cast<Action>(learner_.act(current_, epsilon_, rng));
  }

  void observe(const Transition& t) override {
    std::vector<double> next = encoder_.encode(t.after);
    if (auto loss = learner_.record({current_, to_index(t.action), static_cast<double>(t.reward), next, t.terminated}))
      losses_.push_back(*loss);
    current_ = std::move(next);
  }

  // Mean losses of the training phases run so far; drained by the harness.
  std::vector<double> take_losses() { return std::exchange(losses_, {}); }

  double epsilon() const { return epsilon_; }
  const DqnLearner& learner() const { return learner_; }
  DqnLearner& learner() { return learner_; }

 private:
  ObsEncoder encoder_;
  DqnLearner learner_;
  std::vector<double> current_;
  std::vector<double> losses_;
  double epsilon_ = 1.0;
};

}  // namespace ambimaze
