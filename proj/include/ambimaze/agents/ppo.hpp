#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambimaze/agents/encoder.hpp"
#include "ambimaze/agents/intrinsic.hpp"
#include "ambimaze/nn.hpp"

namespace ambimaze {

struct PpoConfig {
  double learning_rate = 2.5e-4;
  double clip = 0.1;
  double value_coef = 0.5;
  double entropy_coef = 0.001;
  std::size_t parallel_envs = 8;
  std::size_t steps_per_env = 250;
  std::size_t minibatches = 8;
  std::size_t epochs = 4;
  double gamma = 0.99;
  std::vector<std::size_t> hidden{64, 64};
  bool orthogonal_init = false;
  double hidden_gain = std::sqrt(2.0);
  double policy_gain = 3.0;  // "large" output-layer gain of the policy
  double value_gain = 1.0;
  bool normalize_advantages = false;  // per minibatch

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(clip > 0)) out.push_back("clip must be positive");
    if (parallel_envs == 0 || steps_per_env == 0) out.push_back("rollout shape must be positive");
    if (minibatches == 0 || (parallel_envs * steps_per_env) % minibatches != 0)
      out.push_back("minibatches must divide parallel_envs * steps_per_env");
    if (epochs == 0) out.push_back("epochs must be positive");
    if (!(learning_rate > 0)) out.push_back("learning_rate must be positive");
    return out;
  }
};

// min(r * A, clip(r, 1 - eps, 1 + eps) * A) and its derivative in r. The
// clipped branch is constant in r.
struct SurrogateTerm {
  double objective;
  double d_ratio;
};

inline SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  if (unclipped <= clipped) return {unclipped, advantage};
  return {clipped, 0.0};
}

// Discounted returns over one environment's rollout, bootstrapped from
// `last_value` unless the final step ended an episode.
inline std::vector<double> discounted_returns(std::span<const double> rewards, std::span<const std::uint8_t> dones,
                                              double last_value, double gamma) {
  std::vector<double> out(rewards.size());
  double running = last_value;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    if (dones[t]) running = 0.0;
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

struct Rollout {
  std::size_t envs = 0;
  std::size_t steps = 0;
  std::size_t obs_size = 0;
  std::vector<double> obs;        // (env * steps + t) * obs_size
  std::vector<double> next_obs;   // observation after the step (pre-reset)
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;    // extrinsic
  std::vector<double> bonuses;    // scaled intrinsic, zero when inactive
  std::vector<std::uint8_t> dones;
  std::vector<double> last_values;  // per env, value of the observation after the rollout

  std::size_t size() const { return envs * steps; }
  std::span<const double> obs_at(std::size_t i) const { return {obs.data() + i * obs_size, obs_size}; }
  std::span<const double> next_obs_at(std::size_t i) const { return {next_obs.data() + i * obs_size, obs_size}; }

  void validate() const {
    const std::size_t n = size();
    if (obs.size() != n * obs_size || next_obs.size() != n * obs_size || actions.size() != n ||
        log_probs.size() != n || values.size() != n || rewards.size() != n || bonuses.size() != n ||
        dones.size() != n || last_values.size() != envs)
      throw std::invalid_argument("ppo: rollout shape mismatch");
  }
};

struct PpoLosses {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double intrinsic_mean = 0;
};

struct EpisodeRecord {
  int episode_return = 0;
  int steps = 0;
};

// Actor and critic networks plus the clipped-objective update.
class PpoLearner {
 public:
  PpoLearner(std::size_t obs_size, int actions, PpoConfig config, std::uint64_t seed)
      : config_(std::move(config)),
        actions_(actions),
        policy_(sizes(obs_size, static_cast<std::size_t>(actions)), activations()),
        value_(sizes(obs_size, 1), activations()),
        policy_opt_({nn::OptimizerKind::Adam, config_.learning_rate, 0.9, 0.999, 0.95, 1e-5}),
        value_opt_({nn::OptimizerKind::Adam, config_.learning_rate, 0.9, 0.999, 0.95, 1e-5}),
        rng_(make_rng(derive_seed(seed, 0x990))) {
    if (auto p = config_.problems(); !p.empty()) throw std::invalid_argument("ppo config: " + p.front());
    if (config_.orthogonal_init) {
      policy_.init_orthogonal(config_.hidden_gain, config_.policy_gain, derive_seed(seed, 1));
      value_.init_orthogonal(config_.hidden_gain, config_.value_gain, derive_seed(seed, 2));
    } else {
      policy_.init_default(derive_seed(seed, 1));
      value_.init_default(derive_seed(seed, 2));
    }
  }

  std::vector<double> probabilities(std::span<const double> obs) const {
    const auto logits = policy_.forward(obs);
    return nn::softmax<double>(logits);
  }
  double value(std::span<const double> obs) const { return value_.forward(obs)[0]; }

  PpoLosses update(const Rollout& rollout) {
    rollout.validate();
    const std::size_t n = rollout.size();
    std::vector<double> returns(n);
    for (std::size_t e = 0; e < rollout.envs; ++e) {
      const std::size_t off = e * rollout.steps;
      std::vector<double> total(rollout.steps);
      for (std::size_t t = 0; t < rollout.steps; ++t) total[t] = rollout.rewards[off + t] + rollout.bonuses[off + t];
      const auto r = discounted_returns(total, std::span(rollout.dones).subspan(off, rollout.steps),
                                        rollout.last_values[e], config_.gamma);
      std::copy(r.begin(), r.end(), returns.begin() + static_cast<std::ptrdiff_t>(off));
    }
    std::vector<double> advantages(n);
    for (std::size_t i = 0; i < n; ++i) advantages[i] = returns[i] - rollout.values[i];

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t mb = n / config_.minibatches;
    PpoLosses out;
    std::size_t batches = 0;
    nn::Mlp::Cache pc, vc;
    std::vector<double> g_logits(static_cast<std::size_t>(actions_)), g_value(1);
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng_, i)]);
      for (std::size_t b = 0; b < config_.minibatches; ++b) {
        auto gp = policy_.zero_gradients();
        auto gv = value_.zero_gradients();
        double pl = 0, vl = 0, ent = 0;
        const double inv = 1.0 / static_cast<double>(mb);
        double adv_mean = 0, adv_scale = 1;
        if (config_.normalize_advantages) {
          double s1 = 0, s2 = 0;
          for (std::size_t j = b * mb; j < (b + 1) * mb; ++j) s1 += advantages[order[j]];
          adv_mean = s1 * inv;
          for (std::size_t j = b * mb; j < (b + 1) * mb; ++j) {
            const double d = advantages[order[j]] - adv_mean;
            s2 += d * d;
          }
          adv_scale = 1.0 / (std::sqrt(s2 * inv) + 1e-8);
        }
        for (std::size_t j = b * mb; j < (b + 1) * mb; ++j) {
          const std::size_t i = order[j];
          const auto obs = rollout.obs_at(i);
          const auto a = static_cast<std::size_t>(rollout.actions[i]);
          policy_.forward(obs, pc);
          const auto probs = nn::softmax<double>(pc.values.back());
          double h = 0;
          for (double p : probs) h -= p > 0 ? p * std::log(p) : 0.0;
          const double log_p = std::log(std::max(probs[a], 1e-300));
          const double ratio = std::exp(log_p - rollout.log_probs[i]);
          const auto term = clipped_surrogate(ratio, (advantages[i] - adv_mean) * adv_scale, config_.clip);
          pl -= term.objective * inv;
          ent += h * inv;
          for (std::size_t k = 0; k < probs.size(); ++k) {
            const double d_ratio_dz = ratio * ((k == a ? 1.0 : 0.0) - probs[k]);
            const double d_entropy_dz = probs[k] > 0 ? -probs[k] * (std::log(probs[k]) + h) : 0.0;
            g_logits[k] = (-term.d_ratio * d_ratio_dz - config_.entropy_coef * d_entropy_dz) * inv;
          }
          policy_.backward(pc, g_logits, gp);

          value_.forward(obs, vc);
          const double err = vc.values.back()[0] - returns[i];
          vl += err * err * inv;
          g_value[0] = 2.0 * config_.value_coef * err * inv;
          value_.backward(vc, g_value, gv);
        }
        policy_opt_.step(policy_, gp);
        value_opt_.step(value_, gv);
        out.policy_loss += pl;
        out.value_loss += vl;
        out.entropy += ent;
        ++batches;
      }
    }
    out.policy_loss /= static_cast<double>(batches);
    out.value_loss /= static_cast<double>(batches);
    out.entropy /= static_cast<double>(batches);
    out.intrinsic_mean = std::accumulate(rollout.bonuses.begin(), rollout.bonuses.end(), 0.0) / static_cast<double>(n);
    if (!std::isfinite(out.policy_loss) || !std::isfinite(out.value_loss) || !std::isfinite(out.entropy))
      throw std::runtime_error("ppo: non-finite loss");
    return out;
  }

  const PpoConfig& config() const { return config_; }
  const nn::Mlp& policy() const { return policy_; }
  const nn::Mlp& value_net() const { return value_; }
  int action_count() const { return actions_; }

 private:
  std::vector<std::size_t> sizes(std::size_t in, std::size_t out) const {
    std::vector<std::size_t> s{in};
    s.insert(s.end(), config_.hidden.begin(), config_.hidden.end());
    s.push_back(out);
    return s;
  }
  std::vector<nn::Activation> activations() const {
    std::vector<nn::Activation> a(config_.hidden.size(), nn::Activation::Tanh);
    a.push_back(nn::Activation::Identity);
    return a;
  }

  PpoConfig config_;
  int actions_;
  nn::Mlp policy_;
  nn::Mlp value_;
  nn::Optimizer<double> policy_opt_;
  nn::Optimizer<double> value_opt_;
  Rng rng_;
};

// Synchronous collection over parallel tasks followed by one learner update,
// with the optional intrinsic bonus and its switch-off rule.
class PpoTrainer {
 public:
  PpoTrainer(std::vector<std::unique_ptr<EpisodicTask>> tasks, PpoConfig config, IntrinsicConfig intrinsic,
             std::uint64_t seed, std::size_t success_window = 100)
      : tasks_(std::move(tasks)),
        learner_(check_tasks(tasks_, config), tasks_.front()->action_count(), config, seed),
        intrinsic_config_(intrinsic),
        intrinsic_(make_intrinsic(tasks_.front()->observation_size(), tasks_.front()->action_count(), intrinsic,
                                  derive_seed(seed, 0x1e))),
        rng_(make_rng(derive_seed(seed, 0xac7))),
        window_(success_window) {
    current_.resize(tasks_.size());
    returns_.assign(tasks_.size(), 0);
    for (std::size_t e = 0; e < tasks_.size(); ++e) tasks_[e]->reset(current_[e]);
  }

  // One rollout + update. Finished episodes are appended to `completed`.
  PpoLosses iterate(std::vector<EpisodeRecord>& completed) {
    const auto& cfg = learner_.config();
    const std::size_t envs = tasks_.size();
    const std::size_t steps = cfg.steps_per_env;
    const std::size_t obs_size = tasks_.front()->observation_size();
    Rollout ro;
    ro.envs = envs;
    ro.steps = steps;
    ro.obs_size = obs_size;
    const std::size_t n = envs * steps;
    ro.obs.resize(n * obs_size);
    ro.next_obs.resize(n * obs_size);
    ro.actions.resize(n);
    ro.log_probs.resize(n);
    ro.values.resize(n);
    ro.rewards.resize(n);
    ro.bonuses.assign(n, 0.0);
    ro.dones.resize(n);
    ro.last_values.resize(envs);
    std::vector<std::uint8_t> bonus_live(n, 0);
    std::vector<double> next;
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t e = 0; e < envs; ++e) {
        const std::size_t i = e * steps + t;
        std::copy(current_[e].begin(), current_[e].end(), ro.obs.begin() + static_cast<std::ptrdiff_t>(i * obs_size));
        const auto probs = learner_.probabilities(current_[e]);
        const int a = nn::sample_categorical<double>(probs, rng_);
        ro.actions[i] = a;
        ro.log_probs[i] = std::log(std::max(probs[static_cast<std::size_t>(a)], 1e-300));
        ro.values[i] = learner_.value(current_[e]);
        const TaskStep r = tasks_[e]->step(a, next);
        std::copy(next.begin(), next.end(), ro.next_obs.begin() + static_cast<std::ptrdiff_t>(i * obs_size));
        ro.rewards[i] = r.reward;
        bonus_live[i] = intrinsic_ && intrinsic_->active() ? 1 : 0;
        returns_[e] += r.reward > 0 ? 1 : 0;
        const bool done = r.terminated || r.truncated;
        ro.dones[i] = done ? 1 : 0;
        if (done) {
          record_episode({returns_[e], tasks_[e]->episode_steps()}, completed);
          returns_[e] = 0;
          tasks_[e]->reset(current_[e]);
        } else {
          current_[e] = next;
        }
      }
    }
    for (std::size_t e = 0; e < envs; ++e) ro.last_values[e] = learner_.value(current_[e]);

    if (intrinsic_) {
      std::vector<IntrinsicSample> samples;
      samples.reserve(n);
      for (std::size_t i = 0; i < n; ++i) samples.push_back({ro.obs_at(i), ro.actions[i], ro.next_obs_at(i)});
      for (std::size_t i = 0; i < n; ++i)
        if (bonus_live[i]) ro.bonuses[i] = intrinsic_->bonus(samples[i]);
      if (intrinsic_->active()) {
        const std::size_t mb = std::max<std::size_t>(1, intrinsic_config_.minibatch);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<IntrinsicSample> batch;
        for (std::size_t ep = 0; ep < intrinsic_config_.epochs; ++ep) {
          for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng_, i)]);
          for (std::size_t b = 0; b < n; b += mb) {
            batch.clear();
            for (std::size_t j = b; j < std::min(n, b + mb); ++j) batch.push_back(samples[order[j]]);
            intrinsic_->learn(batch);
          }
        }
      }
    }
    ++updates_;
    return learner_.update(ro);
  }

  bool intrinsic_active() const { return intrinsic_ && intrinsic_->active(); }
  // Episode count at which the bonus was switched off, if it was.
  std::optional<std::size_t> deactivated_at() const { return deactivated_at_; }
  std::size_t episodes() const { return episodes_; }
  std::size_t updates() const { return updates_; }
  std::size_t steps_per_iteration() const { return tasks_.size() * learner_.config().steps_per_env; }
  const PpoLearner& learner() const { return learner_; }
  const IntrinsicModule* intrinsic() const { return intrinsic_.get(); }

 private:
  static std::size_t check_tasks(const std::vector<std::unique_ptr<EpisodicTask>>& tasks, const PpoConfig& cfg) {
    if (tasks.empty()) throw std::invalid_argument("ppo: no tasks");
    if (tasks.size() != cfg.parallel_envs) throw std::invalid_argument("ppo: task count differs from parallel_envs");
    return tasks.front()->observation_size();
  }

  void record_episode(EpisodeRecord rec, std::vector<EpisodeRecord>& completed) {
    completed.push_back(rec);
    ++episodes_;
    recent_.push_back(rec.episode_return);
    recent_sum_ += rec.episode_return;
    if (recent_.size() > window_) {
      recent_sum_ -= recent_.front();
      recent_.pop_front();
    }
    // The switch-off rule looks at a full window of episodes.
    if (intrinsic_ && intrinsic_->active() && recent_.size() == window_ &&
        static_cast<double>(recent_sum_) / static_cast<double>(window_) >= intrinsic_config_.off_threshold) {
      intrinsic_->deactivate();
      deactivated_at_ = episodes_;
    }
  }

  std::vector<std::unique_ptr<EpisodicTask>> tasks_;
  PpoLearner learner_;
  IntrinsicConfig intrinsic_config_;
  std::unique_ptr<IntrinsicModule> intrinsic_;
  Rng rng_;
  std::size_t window_;
  std::vector<std::vector<double>> current_;
  std::vector<int> returns_;
  std::deque<int> recent_;
  int recent_sum_ = 0;
  std::size_t episodes_ = 0;
  std::size_t updates_ = 0;
  std::optional<std::size_t> deactivated_at_;
};

}  // namespace ambimaze
