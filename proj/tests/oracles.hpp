#pragma once

// Independent reference implementations shared by the unit suites and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ambimaze/agents/baseline.hpp"
#include "ambimaze/map_format.hpp"
#include "ambimaze/maze.hpp"
#include "ambimaze/nn.hpp"
#include "ambimaze/percept.hpp"
#include "ambimaze/rng.hpp"

namespace oracles {

using namespace ambimaze;

// Random room with sealed reward pockets in the top corners, so that any
// interior layout passes validation.
struct Geometry {
  MazeSpec spec;
  EnvState state;
};

inline Geometry random_geometry(Rng& rng, double wall_p = 0.25, double window_p = 0.1, double gate_p = 0.05) {
  MazeSpec s;
  s.width = 6 + static_cast<int>(uniform_index(rng, 13));
  s.height = 6 + static_cast<int>(uniform_index(rng, 13));
  s.cells.assign(static_cast<std::size_t>(s.width * s.height), CellKind::Wall);
  for (int r = 1; r + 1 < s.height; ++r)
    for (int c = 1; c + 1 < s.width; ++c) {
      const double u = uniform01(rng);
      CellKind k = CellKind::Floor;
      if (u < wall_p) k = CellKind::Wall;
      else if (u < wall_p + window_p) k = CellKind::Window;
      else if (u < wall_p + window_p + gate_p) k = coin_flip(rng) ? CellKind::GateLeft : CellKind::GateRight;
      s.at({c, r}) = k;
    }
  const int w = s.width;
  for (Cell c : {Cell{2, 1}, Cell{1, 2}, Cell{2, 2}, Cell{w - 3, 1}, Cell{w - 2, 2}, Cell{w - 3, 2}})
    s.at(c) = CellKind::Wall;
  s.at({1, 1}) = CellKind::RewardLeft;
  s.at({w - 2, 1}) = CellKind::RewardRight;
  std::vector<Cell> floor;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      if (s.at({c, r}) == CellKind::Floor) floor.push_back({c, r});
  if (floor.empty()) {
    s.at({w / 2, s.height / 2}) = CellKind::Floor;
    floor.push_back({w / 2, s.height / 2});
  }
  s.spawn_position = floor[uniform_index(rng, floor.size())];
  s.at(s.spawn_position) = CellKind::Spawn;
  s.fov = (0.05 + 1.95 * uniform01(rng)) * std::numbers::pi;

  EnvState st;
  st.position = floor[uniform_index(rng, floor.size())];
  st.heading = static_cast<Heading>(uniform_index(rng, kHeadingCount));
  st.context = coin_flip(rng) ? Side::Left : Side::Right;
  st.gate_closed = {coin_flip(rng), coin_flip(rng)};
  return {std::move(s), st};
}

// Independent visibility oracle: angle by atan2, occlusion by exact
// segment/open-square intersection in doubled integer coordinates.
struct Frac {
  long long n, d;  // d > 0
};
inline bool less(Frac a, Frac b) { return a.n * b.d < b.n * a.d; }

// Open t-interval on which coordinate a + t*v lies strictly in (lo, hi).
inline bool axis_interval(long long a, long long v, long long lo, long long hi, Frac& t0, Frac& t1) {
  if (v == 0) {
    t0 = {0, 1};
    t1 = {1, 1};
    return a > lo && a < hi;
  }
  Frac p{lo - a, v}, q{hi - a, v};
  if (v < 0) {
    p = {a - lo, -v};
    q = {a - hi, -v};
    std::swap(p, q);
  }
  t0 = p;
  t1 = q;
  return true;
}

inline bool segment_crosses(Cell from, Cell to, Cell box) {
  const long long ax = 2 * from.col + 1, ay = 2 * from.row + 1;
  const long long vx = 2LL * (to.col - from.col), vy = 2LL * (to.row - from.row);
  Frac x0, x1, y0, y1;
  if (!axis_interval(ax, vx, 2 * box.col, 2 * box.col + 2, x0, x1)) return false;
  if (!axis_interval(ay, vy, 2 * box.row, 2 * box.row + 2, y0, y1)) return false;
  Frac lo = less(x0, y0) ? y0 : x0;
  Frac hi = less(x1, y1) ? x1 : y1;
  if (less(lo, Frac{0, 1})) lo = {0, 1};
  if (less(Frac{1, 1}, hi)) hi = {1, 1};
  return less(lo, hi);
}

inline bool oracle_visible(const Maze& m, const EnvState& s, Cell c) {
  const Cell p = s.position;
  if (c == p) return true;
  const double ray = std::atan2(static_cast<double>(c.col - p.col), static_cast<double>(p.row - c.row));
  double diff = std::fmod(std::fabs(ray - heading_angle(s.heading)), 2 * std::numbers::pi);
  if (diff > std::numbers::pi) diff = 2 * std::numbers::pi - diff;
  if (diff > m.spec().fov / 2 + 1e-9) return false;
  for (int r = std::min(p.row, c.row); r <= std::max(p.row, c.row); ++r)
    for (int col = std::min(p.col, c.col); col <= std::max(p.col, c.col); ++col) {
      const Cell b{col, r};
      if (b == p || b == c) continue;
      if (!segment_crosses(p, c, b)) continue;
      const CellKind k = m.at(b);
      if (k == CellKind::Wall) return false;
      if (auto g = gate_side(k); g && s.gate_closed[index_of(*g)]) return false;
    }
  return true;
}

inline MazeSpec random_spec(Rng& rng) {
  EmazeParams p;
  p.prong_length = 3 + static_cast<int>(uniform_index(rng, 8));
  p.spine_length = 5 + 2 * static_cast<int>(uniform_index(rng, 5));
  p.corridor_width = 1 + static_cast<int>(uniform_index(rng, 3));
  MazeSpec s = generate_emaze(p);
  if (coin_flip(rng)) s = mirror(s);
  if (coin_flip(rng)) s.fov = (0.1 + 1.9 * uniform01(rng)) * std::numbers::pi;
  if (coin_flip(rng)) s.max_moves = 1 + static_cast<int>(uniform_index(rng, 20000));
  if (coin_flip(rng)) s.cell_px = 1 + static_cast<int>(uniform_index(rng, 256));
  if (coin_flip(rng)) s.spawn_heading = static_cast<Heading>(uniform_index(rng, kHeadingCount));
  return s;
}

inline nn::Mlp random_net(Rng& rng, std::vector<std::size_t> sizes) {
  std::vector<nn::Activation> acts;
  for (std::size_t i = 0; i + 2 < sizes.size(); ++i)
    acts.push_back(coin_flip(rng) ? nn::Activation::Tanh : nn::Activation::Relu);
  acts.push_back(coin_flip(rng) ? nn::Activation::Identity : nn::Activation::Tanh);
  nn::Mlp net(sizes, acts);
  for (auto p : net.parameters())
    for (auto& x : p) x = standard_normal(rng) * 0.7;
  return net;
}

inline std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Largest relative error between backward() and central differences of the
// scalar loss g . net(x), over every parameter.
inline double gradient_check(nn::Mlp net, const std::vector<double>& x, const std::vector<double>& g, double h = 1e-4) {
  nn::Mlp::Cache cache;
  net.forward(x, cache);
  const nn::Gradients<double> analytic = net.backward(cache, g);
  const auto views = nn::gradient_views(analytic);
  double worst = 0;
  auto params = net.parameters();
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t k = 0; k < params[t].size(); ++k) {
      const double keep = params[t][k];
      params[t][k] = keep + h;
      net.touch();
      const double up = dot(net.forward(x), g);
      params[t][k] = keep - h;
      net.touch();
      const double down = dot(net.forward(x), g);
      params[t][k] = keep;
      net.touch();
      const double numeric = (up - down) / (2 * h);
      const double a = views[t][k];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-3});
      worst = std::max(worst, rel);
    }
  return worst;
}

// Relu kinks break finite differences; nudge inputs away from them.
inline bool near_relu_kink(const nn::Mlp& net, const std::vector<double>& x, double margin) {
  nn::Mlp::Cache c;
  net.forward(x, c);
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    const auto& l = net.layer(li);
    if (l.activation != nn::Activation::Relu) continue;
    const auto& in = c.values[li];
    for (std::size_t o = 0; o < l.out; ++o) {
      double pre = l.bias[o];
      for (std::size_t j = 0; j < l.in; ++j) pre += l.weight[o * l.in + j] * in[j];
      if (std::fabs(pre) < margin) return true;
    }
  }
  return false;
}

// A state just past a closed gate on a random E-maze variant, moved a
// random number of steps further so it lands anywhere in the branch.
struct PostGate {
  MazeSpec spec;
  EnvState state;
  Side side;
};

inline PostGate random_post_gate_state(Rng& rng) {
  EmazeParams p;
  p.prong_length = 3 + static_cast<int>(uniform_index(rng, 6));
  p.spine_length = 5 + 2 * static_cast<int>(uniform_index(rng, 4));
  p.corridor_width = 1 + static_cast<int>(uniform_index(rng, 2));
  MazeSpec spec = generate_emaze(p);
  if (coin_flip(rng)) spec = mirror(spec);
  spec.max_moves = 1000000;
  const Maze m(spec);
  const Side side = coin_flip(rng) ? Side::Left : Side::Right;
  EnvState s = reset(m, rng());
  s.context = side;
  auto closed = [&]() { return s.gate_closed[0] || s.gate_closed[1]; };
  if (coin_flip(rng)) {
    // wander until some gate closes behind the agent
    for (int t = 0; t < 200000 && !closed(); ++t) {
      s = step(m, s, random_policy(rng)).first;
      if (s.done()) {
        const Side ctx = s.context;
        s = reset(m, rng());
        s.context = ctx;
      }
    }
  }
  if (!closed()) {
    s = reset(m, rng());
    s.context = side;
    for (Action a : oracle_plan(m, side)) {
      s = step(m, s, a).first;
      if (closed()) break;
    }
  }
  const Side entered = s.gate_closed[0] ? Side::Left : Side::Right;
  const int extra = static_cast<int>(uniform_index(rng, 200));
  for (int t = 0; t < extra && !s.done(); ++t) {
    EnvState n = step(m, s, random_policy(rng)).first;
    if (n.terminated) break;
    s = n;
  }
  s.steps_taken = 0;
  return {std::move(spec), s, entered};
}

}  // namespace oracles
