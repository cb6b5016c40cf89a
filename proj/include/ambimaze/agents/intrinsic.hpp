#pragma once

#include <algorithm>
#include <memory>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ambimaze/nn.hpp"

namespace ambimaze {

enum class IntrinsicKind { None, Rnd, Icm };

inline IntrinsicKind intrinsic_kind_from_string(std::string_view s) {
  if (s == "none") return IntrinsicKind::None;
  if (s == "rnd") return IntrinsicKind::Rnd;
  if (s == "icm") return IntrinsicKind::Icm;
  throw std::invalid_argument("unknown intrinsic module '" + std::string(s) + "'");
}

struct IntrinsicConfig {
  IntrinsicKind kind = IntrinsicKind::None;
  double beta = 0.1;             // scale of the normalized bonus
  double off_threshold = 0.2;    // rolling success that switches the bonus off
  double learning_rate = 1e-3;
  std::size_t feature_size = 32;
  std::size_t hidden = 64;
  std::size_t epochs = 1;
  std::size_t minibatch = 250;
  bool normalize = true;  // divide bonuses by their running RMS
  double forward_weight = 0.8;  // ICM: share of the forward loss in the encoder's objective
};

struct IntrinsicSample {
  std::span<const double> obs;
  int action = 0;
  std::span<const double> next_obs;
};

// Prediction-error exploration bonus. Once deactivated it stays off and
// every bonus is exactly zero.
class IntrinsicModule {
 public:
  virtual ~IntrinsicModule() = default;

  // Raw prediction error for one transition; always >= 0.
  virtual double raw_bonus(const IntrinsicSample& s) const = 0;
  // Trains on a batch; returns the mean loss.
  virtual double learn(std::span<const IntrinsicSample> batch) = 0;

  // Scaled bonus added to the extrinsic reward.
  double bonus(const IntrinsicSample& s) {
    if (!active_) return 0.0;
    const double raw = raw_bonus(s);
    if (!config_.normalize) return config_.beta * raw;
    ++count_;
    sum_sq_ += raw * raw;
    const double rms = std::sqrt(sum_sq_ / static_cast<double>(count_));
    return rms > 0 ? config_.beta * raw / rms : 0.0;
  }

  bool active() const { return active_; }
  void deactivate() { active_ = false; }
  const IntrinsicConfig& config() const { return config_; }

 protected:
  explicit IntrinsicModule(IntrinsicConfig config) : config_(config) {}
  IntrinsicConfig config_;

 private:
  bool active_ = true;
  std::uint64_t count_ = 0;
  double sum_sq_ = 0.0;
};

namespace detail {

inline double mse(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace detail

// Random network distillation: a frozen random target network and a
// predictor regressed onto it; the bonus is their squared disagreement on s'.
class RndModule final : public IntrinsicModule {
 public:
  RndModule(std::size_t obs_size, IntrinsicConfig config, std::uint64_t seed)
      : IntrinsicModule(config),
        target_({obs_size, config.hidden, config.feature_size}, {nn::Activation::Tanh, nn::Activation::Identity}),
        predictor_({obs_size, config.hidden, config.feature_size}, {nn::Activation::Tanh, nn::Activation::Identity}),
        optimizer_({nn::OptimizerKind::Adam, config.learning_rate}) {
    target_.init_orthogonal(std::sqrt(2.0), std::sqrt(2.0), derive_seed(seed, 0x7a));
    predictor_.init_default(derive_seed(seed, 0x7b));
  }

  double raw_bonus(const IntrinsicSample& s) const override {
    return detail::mse(target_.forward(s.next_obs), predictor_.forward(s.next_obs));
  }

  double learn(std::span<const IntrinsicSample> batch) override {
    if (batch.empty()) return 0.0;
    auto grads = predictor_.zero_gradients();
    nn::Mlp::Cache cache;
    std::vector<double> g(config_.feature_size);
    double loss = 0;
    const double n = static_cast<double>(batch.size()) * static_cast<double>(config_.feature_size);
    for (const auto& s : batch) {
      const auto target = target_.forward(s.next_obs);
      predictor_.forward(s.next_obs, cache);
      const auto& pred = cache.values.back();
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double d = pred[k] - target[k];
        loss += d * d;
        g[k] = 2.0 * d / n;
      }
      predictor_.backward(cache, g, grads);
    }
    optimizer_.step(predictor_, grads);
    return loss / n;
  }

  const nn::Mlp& target() const { return target_; }
  const nn::Mlp& predictor() const { return predictor_; }

 private:
  nn::Mlp target_;
  nn::Mlp predictor_;
  nn::Optimizer<double> optimizer_;
};

// Intrinsic curiosity: an encoder shaped by an inverse-dynamics head, and a
// forward model in that feature space whose error is the bonus.
class IcmModule final : public IntrinsicModule {
 public:
  IcmModule(std::size_t obs_size, int actions, IntrinsicConfig config, std::uint64_t seed)
      : IntrinsicModule(config),
        actions_(actions),
        encoder_({obs_size, config.hidden, config.feature_size}, {nn::Activation::Tanh, nn::Activation::Tanh}),
        inverse_({2 * config.feature_size, config.hidden, static_cast<std::size_t>(actions)},
                 {nn::Activation::Tanh, nn::Activation::Identity}),
        forward_({config.feature_size + static_cast<std::size_t>(actions), config.hidden, config.feature_size},
                 {nn::Activation::Tanh, nn::Activation::Identity}),
        encoder_opt_({nn::OptimizerKind::Adam, config.learning_rate}),
        inverse_opt_({nn::OptimizerKind::Adam, config.learning_rate}),
        forward_opt_({nn::OptimizerKind::Adam, config.learning_rate}) {
    encoder_.init_default(derive_seed(seed, 0x1c1));
    inverse_.init_default(derive_seed(seed, 0x1c2));
    forward_.init_default(derive_seed(seed, 0x1c3));
  }

  std::vector<double> features(std::span<const double> obs) const { return encoder_.forward(obs); }

  std::vector<double> predict_next(std::span<const double> phi, int action) const {
    std::vector<double> in(phi.begin(), phi.end());
    in.resize(phi.size() + static_cast<std::size_t>(actions_), 0.0);
    in[phi.size() + static_cast<std::size_t>(action)] = 1.0;
    return forward_.forward(in);
  }

  double raw_bonus(const IntrinsicSample& s) const override {
    const auto phi = features(s.obs);
    const auto phi_next = features(s.next_obs);
    return detail::mse(predict_next(phi, s.action), phi_next);
  }

  // Loss = (1 - w) * inverse cross-entropy + w * forward MSE; both terms
  // reach the encoder, so features drop what the agent cannot predict.
  double learn(std::span<const IntrinsicSample> batch) override {
    if (batch.empty()) return 0.0;
    auto g_enc = encoder_.zero_gradients();
    auto g_inv = inverse_.zero_gradients();
    auto g_fwd = forward_.zero_gradients();
    nn::Mlp::Cache c_s, c_n, c_inv, c_fwd;
    const std::size_t f = config_.feature_size;
    const double n = static_cast<double>(batch.size());
    const double w = config_.forward_weight;
    double inv_loss = 0, fwd_loss = 0;
    std::vector<double> joint(2 * f), in_fwd(f + static_cast<std::size_t>(actions_)), g_logits(static_cast<std::size_t>(actions_)),
        g_pred(f), g_phi(f), g_phi_next(f);
    for (const auto& s : batch) {
      encoder_.forward(s.obs, c_s);
      encoder_.forward(s.next_obs, c_n);
      const auto& phi = c_s.values.back();
      const auto& phi_next = c_n.values.back();
      std::copy(phi.begin(), phi.end(), joint.begin());
      std::copy(phi_next.begin(), phi_next.end(), joint.begin() + static_cast<std::ptrdiff_t>(f));
      inverse_.forward(joint, c_inv);
      const auto probs = nn::softmax<double>(c_inv.values.back());
      inv_loss -= std::log(std::max(probs[static_cast<std::size_t>(s.action)], 1e-12));
      for (std::size_t a = 0; a < g_logits.size(); ++a)
        g_logits[a] = (1.0 - w) * (probs[a] - (static_cast<int>(a) == s.action ? 1.0 : 0.0)) / n;
      const auto g_joint = inverse_.backward(c_inv, g_logits, g_inv, true);

      std::fill(in_fwd.begin(), in_fwd.end(), 0.0);
      std::copy(phi.begin(), phi.end(), in_fwd.begin());
      in_fwd[f + static_cast<std::size_t>(s.action)] = 1.0;
      forward_.forward(in_fwd, c_fwd);
      const auto& pred = c_fwd.values.back();
      for (std::size_t k = 0; k < f; ++k) {
        const double d = pred[k] - phi_next[k];
        fwd_loss += d * d / static_cast<double>(f);
        g_pred[k] = w * 2.0 * d / (static_cast<double>(f) * n);
      }
      const auto g_in = forward_.backward(c_fwd, g_pred, g_fwd, true);
      for (std::size_t k = 0; k < f; ++k) {
        g_phi[k] = g_joint[k] + g_in[k];
        g_phi_next[k] = g_joint[f + k] - g_pred[k];
      }
      encoder_.backward(c_s, g_phi, g_enc);
      encoder_.backward(c_n, g_phi_next, g_enc);
    }
    encoder_opt_.step(encoder_, g_enc);
    inverse_opt_.step(inverse_, g_inv);
    forward_opt_.step(forward_, g_fwd);
    return (inv_loss + fwd_loss) / n;
  }

 private:
  int actions_;
  nn::Mlp encoder_;
  nn::Mlp inverse_;
  nn::Mlp forward_;
  nn::Optimizer<double> encoder_opt_;
  nn::Optimizer<double> inverse_opt_;
  nn::Optimizer<double> forward_opt_;
};

inline std::unique_ptr<IntrinsicModule> make_intrinsic(std::size_t obs_size, int actions, const IntrinsicConfig& config,
                                                       std::uint64_t seed) {
  switch (config.kind) {
    case IntrinsicKind::Rnd: return std::make_unique<RndModule>(obs_size, config, seed);
    case IntrinsicKind::Icm: return std::make_unique<IcmModule>(obs_size, actions, config, seed);
    case IntrinsicKind::None: break;
  }
  return nullptr;
}

}  // namespace ambimaze
