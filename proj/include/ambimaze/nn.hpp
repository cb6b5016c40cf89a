#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambimaze/rng.hpp"

namespace ambimaze::nn {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1, Relu = 2 };

template <typename T>
T activate(Activation a, T x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > T(0) ? x : T(0);
    case Activation::Identity: break;
  }
  return x;
}

// Derivative expressed through the activation's output y.
template <typename T>
T activate_grad(Activation a, T y) {
  switch (a) {
    case Activation::Tanh: return T(1) - y * y;
    case Activation::Relu: return y > T(0) ? T(1) : T(0);
    case Activation::Identity: break;
  }
  return T(1);
}

// Row-major dense matrix.
template <typename T = double>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}
  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Gaussian matrix with orthonormalized rows (rows <= cols) or columns
// (otherwise), scaled by `gain`. Modified Gram-Schmidt with one
// re-orthogonalization pass.
template <typename T = double>
Matrix<T> orthogonal_init(std::size_t rows, std::size_t cols, double gain, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw DimensionError("orthogonal_init: empty shape");
  Rng rng = make_rng(seed);
  const bool by_rows = rows <= cols;
  const std::size_t count = by_rows ? rows : cols;  // vectors to orthonormalize
  const std::size_t dim = by_rows ? cols : rows;
  std::vector<std::vector<double>> basis(count, std::vector<double>(dim));
  for (auto& v : basis)
    for (auto& x : v) x = standard_normal(rng);
  for (std::size_t i = 0; i < count; ++i) {
    auto& v = basis[i];
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < i; ++j) {
        double dot = 0;
        for (std::size_t k = 0; k < dim; ++k) dot += v[k] * basis[j][k];
        for (std::size_t k = 0; k < dim; ++k) v[k] -= dot * basis[j][k];
      }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // Degenerate draw: fall back to a fresh random direction.
      for (auto& x : v) x = standard_normal(rng);
      --i;
      continue;
    }
    for (auto& x : v) x /= norm;
  }
  Matrix<T> out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out(r, c) = static_cast<T>(gain * (by_rows ? basis[r][c] : basis[c][r]));
  return out;
}

template <typename T>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<T> weight;  // out x in, row-major
  std::vector<T> bias;
  Activation activation = Activation::Identity;
};

// Gradients (or any per-parameter quantity) shaped like an Mlp.
template <typename T>
struct Gradients {
  std::vector<std::vector<T>> weight;
  std::vector<std::vector<T>> bias;

  void scale(T s) {
    for (auto& w : weight) for (auto& x : w) x *= s;
    for (auto& b : bias) for (auto& x : b) x *= s;
  }
  void fill(T v) {
    for (auto& w : weight) std::fill(w.begin(), w.end(), v);
    for (auto& b : bias) std::fill(b.begin(), b.end(), v);
  }
  double norm() const {
    double s = 0;
    for (const auto& w : weight) for (T x : w) s += double(x) * double(x);
    for (const auto& b : bias) for (T x : b) s += double(x) * double(x);
    return std::sqrt(s);
  }
  bool all_zero() const {
    for (const auto& w : weight) for (T x : w) if (x != T(0)) return false;
    for (const auto& b : bias) for (T x : b) if (x != T(0)) return false;
    return true;
  }
  // Rescales so the global norm does not exceed `max_norm`.
  void clip_norm(double max_norm) {
    const double n = norm();
    if (n > max_norm && n > 0) scale(static_cast<T>(max_norm / n));
  }
};

template <typename T>
class BasicMlp {
 public:
  struct Cache {
    std::vector<std::vector<T>> values;  // values[0] = input, values[i+1] = output of layer i
    std::uint64_t version = 0;
  };

  BasicMlp() = default;

  // sizes = {input, hidden..., output}; one activation per layer.
  BasicMlp(std::vector<std::size_t> sizes, std::vector<Activation> activations) {
    if (sizes.size() < 2 || activations.size() != sizes.size() - 1)
      throw DimensionError("mlp: need at least two sizes and one activation per layer");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      if (sizes[i] == 0 || sizes[i + 1] == 0) throw DimensionError("mlp: zero-width layer");
      DenseLayer<T> l;
      l.in = sizes[i];
      l.out = sizes[i + 1];
      l.weight.assign(l.in * l.out, T(0));
      l.bias.assign(l.out, T(0));
      l.activation = activations[i];
      layers_.push_back(std::move(l));
    }
  }

  std::size_t input_size() const { return layers_.front().in; }
  std::size_t output_size() const { return layers_.back().out; }
  std::size_t layer_count() const { return layers_.size(); }
  const DenseLayer<T>& layer(std::size_t i) const { return layers_[i]; }
  // Mutable access invalidates outstanding caches.
  DenseLayer<T>& mutable_layer(std::size_t i) {
    ++version_;
    return layers_[i];
  }
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s{layers_.front().in};
    for (const auto& l : layers_) s.push_back(l.out);
    return s;
  }

  void forward(std::span<const T> input, Cache& cache) const {
    if (input.size() != input_size())
      throw DimensionError("mlp forward: input has " + std::to_string(input.size()) + " values, expected " +
                           std::to_string(input_size()));
    cache.values.resize(layers_.size() + 1);
    cache.values[0].assign(input.begin(), input.end());
    cache.version = version_;
    std::vector<std::size_t> nonzero;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& l = layers_[li];
      const auto& x = cache.values[li];
      auto& y = cache.values[li + 1];
      y.assign(l.bias.begin(), l.bias.end());
      nonzero.clear();
      for (std::size_t j = 0; j < l.in; ++j)
        if (x[j] != T(0)) nonzero.push_back(j);
      if (nonzero.size() * 4 < l.in) {
        for (std::size_t o = 0; o < l.out; ++o) {
          const T* w = &l.weight[o * l.in];
          T acc = y[o];
          for (std::size_t j : nonzero) acc += w[j] * x[j];
          y[o] = acc;
        }
      } else {
        for (std::size_t o = 0; o < l.out; ++o) {
          const T* w = &l.weight[o * l.in];
          // Four partial sums keep the adds independent.
          T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0);
          std::size_t j = 0;
          for (; j + 4 <= l.in; j += 4) {
            a0 += w[j] * x[j];
            a1 += w[j + 1] * x[j + 1];
            a2 += w[j + 2] * x[j + 2];
            a3 += w[j + 3] * x[j + 3];
          }
          for (; j < l.in; ++j) a0 += w[j] * x[j];
          y[o] += (a0 + a1) + (a2 + a3);
        }
      }
      for (auto& v : y) v = activate(l.activation, v);
    }
  }

  std::vector<T> forward(std::span<const T> input) const {
    Cache c;
    forward(input, c);
    return std::move(c.values.back());
  }

  Gradients<T> zero_gradients() const {
    Gradients<T> g;
    for (const auto& l : layers_) {
      g.weight.emplace_back(l.weight.size(), T(0));
      g.bias.emplace_back(l.bias.size(), T(0));
    }
    return g;
  }

  // Adds d(loss)/d(params) into `grads` given d(loss)/d(output); returns
  // d(loss)/d(input) when `want_input_grad` is set.
  std::vector<T> backward(const Cache& cache, std::span<const T> output_grad, Gradients<T>& grads,
                          bool want_input_grad = false) const {
    if (cache.version != version_ || cache.values.size() != layers_.size() + 1)
      throw std::logic_error("mlp backward: cache is stale (parameters changed since forward)");
    if (output_grad.size() != output_size()) throw DimensionError("mlp backward: output gradient size mismatch");
    std::vector<T> delta(output_grad.begin(), output_grad.end());
    std::vector<T> next;
    std::vector<std::size_t> nonzero;
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& l = layers_[li];
      const auto& x = cache.values[li];
      const auto& y = cache.values[li + 1];
      for (std::size_t o = 0; o < l.out; ++o) delta[o] *= activate_grad(l.activation, y[o]);
      auto& gw = grads.weight[li];
      auto& gb = grads.bias[li];
      nonzero.clear();
      for (std::size_t j = 0; j < l.in; ++j)
        if (x[j] != T(0)) nonzero.push_back(j);
      const bool sparse = nonzero.size() * 4 < l.in;
      for (std::size_t o = 0; o < l.out; ++o) {
        const T d = delta[o];
        gb[o] += d;
        if (d == T(0)) continue;
        T* row = &gw[o * l.in];
        if (sparse) {
          for (std::size_t j : nonzero) row[j] += d * x[j];
        } else {
          for (std::size_t j = 0; j < l.in; ++j) row[j] += d * x[j];
        }
      }
      if (li == 0 && !want_input_grad) return {};
      next.assign(l.in, T(0));
      for (std::size_t o = 0; o < l.out; ++o) {
        const T d = delta[o];
        if (d == T(0)) continue;
        const T* w = &l.weight[o * l.in];
        for (std::size_t j = 0; j < l.in; ++j) next[j] += d * w[j];
      }
      delta.swap(next);
    }
    return delta;
  }

  Gradients<T> backward(const Cache& cache, std::span<const T> output_grad) const {
    Gradients<T> g = zero_gradients();
    backward(cache, output_grad, g);
    return g;
  }

  bool all_finite() const {
    for (const auto& l : layers_) {
      for (T w : l.weight) if (!std::isfinite(w)) return false;
      for (T b : l.bias) if (!std::isfinite(b)) return false;
    }
    return true;
  }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; the usual
  // framework default for dense layers.
  void init_default(std::uint64_t seed) {
    Rng rng = make_rng(seed);
    for (auto& l : layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
      for (auto& w : l.weight) w = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
      for (auto& b : l.bias) b = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
    }
    ++version_;
  }

  // Orthogonal weights, zero biases; the last layer gets its own gain.
  void init_orthogonal(double hidden_gain, double output_gain, std::uint64_t seed) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      auto& l = layers_[i];
      const double gain = i + 1 == layers_.size() ? output_gain : hidden_gain;
      l.weight = orthogonal_init<T>(l.out, l.in, gain, derive_seed(seed, i)).data;
      std::fill(l.bias.begin(), l.bias.end(), T(0));
    }
    ++version_;
  }

  // Flat parameter views in layer order (weights, then bias, per layer).
  std::vector<std::span<T>> parameters() {
    ++version_;
    std::vector<std::span<T>> out;
    for (auto& l : layers_) {
      out.emplace_back(l.weight);
      out.emplace_back(l.bias);
    }
    return out;
  }

  void copy_parameters_from(const BasicMlp& other) {
    if (other.sizes() != sizes()) throw DimensionError("mlp copy: shape mismatch");
    layers_ = other.layers_;
    ++version_;
  }

 private:
  std::vector<DenseLayer<T>> layers_;
  std::uint64_t version_ = 0;
};

using Mlp = BasicMlp<double>;

template <typename T>
std::vector<std::span<const T>> gradient_views(const Gradients<T>& g) {
  std::vector<std::span<const T>> out;
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    out.emplace_back(g.weight[i]);
    out.emplace_back(g.bias[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

enum class OptimizerKind { Sgd, RmsProp, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;      // adam
  double beta2 = 0.999;    // adam
  double decay = 0.95;     // rmsprop
  double epsilon = 1e-8;
};

template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t step_count() const { return steps_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

  void step(BasicMlp<T>& net, const Gradients<T>& grads) {
    auto params = net.parameters();
    auto g = gradient_views(grads);
    if (params.size() != g.size()) throw DimensionError("optimizer: gradient tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params[i].size() != g[i].size()) throw DimensionError("optimizer: gradient shape mismatch");
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      }
    } else if (m_.size() != params.size()) {
      throw DimensionError("optimizer: parameter layout changed");
    }
    ++steps_;
    const double lr = config_.learning_rate;
    const double eps = config_.epsilon;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      const auto& gi = g[i];
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double grad = static_cast<double>(gi[k]);
        switch (config_.kind) {
          case OptimizerKind::Sgd:
            p[k] -= static_cast<T>(lr * grad);
            break;
          case OptimizerKind::RmsProp:
            v[k] = config_.decay * v[k] + (1.0 - config_.decay) * grad * grad;
            p[k] -= static_cast<T>(lr * grad / (std::sqrt(v[k]) + eps));
            break;
          case OptimizerKind::Adam: {
            m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad;
            v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad * grad;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
            break;
          }
        }
      }
    }
    if (!net.all_finite()) throw std::runtime_error("optimizer: non-finite parameter after update");
  }

 private:
  OptimizerConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints: "AMLP" magic, u32 layer count, u32 sizes[count + 1],
// u8 activations[count], then each layer's weights (row-major) and biases as
// little-endian f32.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw std::runtime_error("checkpoint: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace detail

template <typename T>
std::string encode_checkpoint(const BasicMlp<T>& net) {
  std::string out = "AMLP";
  detail::put_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t s : net.sizes()) detail::put_u32(out, static_cast<std::uint32_t>(s));
  for (std::size_t i = 0; i < net.layer_count(); ++i) out.push_back(static_cast<char>(net.layer(i).activation));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& l = net.layer(i);
    for (const auto* vec : {&l.weight, &l.bias})
      for (T x : *vec) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  }
  return out;
}

template <typename T = double>
BasicMlp<T> decode_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, 4) != "AMLP") throw std::runtime_error("checkpoint: bad magic");
  std::size_t pos = 4;
  const std::uint32_t count = detail::get_u32(bytes, pos);
  if (count == 0 || count > 1024) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i <= count; ++i) sizes.push_back(detail::get_u32(bytes, pos));
  std::vector<Activation> acts;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (pos >= bytes.size()) throw std::runtime_error("checkpoint: truncated");
    const auto a = static_cast<unsigned char>(bytes[pos++]);
    if (a > 2) throw std::runtime_error("checkpoint: unknown activation");
    acts.push_back(static_cast<Activation>(a));
  }
  BasicMlp<T> net(sizes, acts);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& l = net.mutable_layer(i);
    for (auto* vec : {&l.weight, &l.bias})
      for (T& x : *vec) x = static_cast<T>(std::bit_cast<float>(detail::get_u32(bytes, pos)));
  }
  if (pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return net;
}

template <typename T>
void save_checkpoint(const std::string& path, const BasicMlp<T>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const std::string bytes = encode_checkpoint(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T = double>
BasicMlp<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint<T>(ss.str());
}

// ---------------------------------------------------------------------------
// Small helpers for heads
// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  T sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += (p[i] = std::exp(logits[i] - mx));
  for (auto& x : p) x /= sum;
  return p;
}

// Samples an index from a probability vector.
template <typename T>
int sample_categorical(std::span<const T> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += static_cast<double>(probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace ambimaze::nn
