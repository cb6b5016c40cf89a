#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambimaze/maze.hpp"

namespace ambimaze {

// Dense membership set over the cells of one maze.
class CellSet {
 public:
  CellSet() = default;
  CellSet(int width, int height)
      : width_(width), members_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

  bool contains(Cell c) const {
    return c.col >= 0 && c.row >= 0 && c.col < width_ &&
           index(c) < members_.size() && members_[index(c)] != 0;
  }
  void insert(Cell c) { members_[index(c)] = 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(std::count(members_.begin(), members_.end(), 1));
  }
  bool is_subset_of(const CellSet& other) const {
    for (std::size_t i = 0; i < members_.size(); ++i)
      if (members_[i] && !(i < other.members_.size() && other.members_[i])) return false;
    return true;
  }
  bool operator==(const CellSet&) const = default;

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.col);
  }
  int width_ = 0;
  std::vector<std::uint8_t> members_;
};

namespace detail {

inline bool blocks_sight(const Maze& maze, const EnvState& state, Cell c) {
  const CellKind k = maze.at(c);
  if (k == CellKind::Wall) return true;
  if (auto s = gate_side(k)) return state.gate_closed[index_of(*s)];
  return false;
}

// Walks the cells crossed by the segment between the centers of `from` and
// `to` (supercover order, exact integer arithmetic) and reports whether any
// cell strictly between them blocks sight. When the segment passes exactly
// through a grid corner it steps diagonally, so the two cells touching that
// corner are not considered crossed.
inline bool line_blocked(const Maze& maze, const EnvState& state, Cell from, Cell to) {
  const int dx = to.col - from.col;
  const int dy = to.row - from.row;
  const int nx = std::abs(dx);
  const int ny = std::abs(dy);
  const int sx = dx > 0 ? 1 : -1;
  const int sy = dy > 0 ? 1 : -1;
  Cell p = from;
  for (int ix = 0, iy = 0; ix < nx || iy < ny;) {
    // Compare the parameters of the next vertical and horizontal crossings,
    // (1 + 2ix) / 2nx against (1 + 2iy) / 2ny, by cross-multiplication.
    const long long tx = static_cast<long long>(1 + 2 * ix) * ny;
    const long long ty = static_cast<long long>(1 + 2 * iy) * nx;
    if (ix < nx && iy < ny && tx == ty) {
      p.col += sx;
      p.row += sy;
      ++ix;
      ++iy;
    } else if (iy >= ny || (ix < nx && tx < ty)) {
      p.col += sx;
      ++ix;
    } else {
      p.row += sy;
      ++iy;
    }
    if (p == to) break;
    if (blocks_sight(maze, state, p)) return true;
  }
  return false;
}

inline bool within_cone(Heading heading, double fov, int dx, int dy) {
  const Offset o = offset_of(heading);
  const double hx = o.dx;
  const double hy = o.dy;
  const double dot = hx * dx + hy * dy;
  const double norm = std::hypot(hx, hy) * std::hypot(static_cast<double>(dx), static_cast<double>(dy));
  const double angle = std::acos(std::clamp(dot / norm, -1.0, 1.0));
  return angle <= fov / 2.0 + 1e-9;
}

}  // namespace detail

// Whether cell `c` is seen from the agent's current pose.
inline bool cell_visible(const Maze& maze, const EnvState& state, Cell c) {
  if (!maze.in_bounds(c)) return false;
  const Cell p = state.position;
  if (c == p) return true;
  if (!detail::within_cone(state.heading, maze.spec().fov, c.col - p.col, c.row - p.row)) return false;
  return !detail::line_blocked(maze, state, p, c);
}

inline CellSet visible_cells(const Maze& maze, const EnvState& state) {
  CellSet out(maze.width(), maze.height());
  for (int r = 0; r < maze.height(); ++r)
    for (int c = 0; c < maze.width(); ++c)
      if (cell_visible(maze, state, {c, r})) out.insert({c, r});
  return out;
}

// Context side if the active reward site or any clue cell is in view.
inline std::optional<Side> reward_visible(const Maze& maze, const EnvState& state) {
  for (Cell c : maze.reward_cells(state.context))
    if (cell_visible(maze, state, c)) return state.context;
  for (Cell c : maze.clue_cells())
    if (cell_visible(maze, state, c)) return state.context;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

namespace palette {
inline constexpr Rgb kHidden{0, 0, 0};
inline constexpr Rgb kWall{200, 0, 0};
inline constexpr Rgb kWindow{0, 0, 220};
inline constexpr Rgb kFloor{230, 230, 230};
inline constexpr Rgb kClueLeft{0, 0, 220};
inline constexpr Rgb kClueRight{0, 200, 0};
inline constexpr Rgb kReward{255, 220, 0};
inline constexpr Rgb kAgent{128, 128, 128};
}  // namespace palette

struct Frame {
  int width_px = 0;
  int height_px = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  Frame() = default;
  Frame(int w, int h) : width_px(w), height_px(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0) {}

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_px) + static_cast<std::size_t>(x)) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_px) + static_cast<std::size_t>(x)) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
  bool operator==(const Frame&) const = default;
};

namespace detail {

inline Rgb cell_color(const Maze& maze, const EnvState& state, Cell c) {
  const CellKind k = maze.at(c);
  switch (k) {
    case CellKind::Wall: return palette::kWall;
    case CellKind::Window: return palette::kWindow;
    case CellKind::GateLeft:
    case CellKind::GateRight:
      return state.gate_closed[index_of(*gate_side(k))] ? palette::kWall : palette::kFloor;
    case CellKind::Clue:
      return state.context == Side::Left ? palette::kClueLeft : palette::kClueRight;
    default:
      return palette::kFloor;
  }
}

struct Point {
  double x;
  double y;
};

inline double edge(Point a, Point b, Point p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

inline bool in_triangle(const std::array<Point, 3>& t, Point p) {
  const double e0 = edge(t[0], t[1], p);
  const double e1 = edge(t[1], t[2], p);
  const double e2 = edge(t[2], t[0], p);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

// Agent triangle in cell-local units ([0,1]^2), apex along the heading.
inline std::array<Point, 3> agent_triangle(Heading h) {
  const double a = heading_angle(h);
  const double ux = std::sin(a);
  const double uy = -std::cos(a);  // rows grow southward
  const double vx = -uy;
  const double vy = ux;
  constexpr double r = 0.45;
  const Point c{0.5, 0.5};
  return {Point{c.x + r * ux, c.y + r * uy},
          Point{c.x - 0.6 * r * ux + 0.8 * r * vx, c.y - 0.6 * r * uy + 0.8 * r * vy},
          Point{c.x - 0.6 * r * ux - 0.8 * r * vx, c.y - 0.6 * r * uy - 0.8 * r * vy}};
}

}  // namespace detail

inline Frame render(const Maze& maze, const EnvState& state) {
  const int px = maze.spec().cell_px;
  Frame frame(maze.width() * px, maze.height() * px);
  const CellSet seen = visible_cells(maze, state);
  const auto triangle = detail::agent_triangle(state.heading);
  const double radius = 0.375;  // diameter 0.75 cell

  for (int r = 0; r < maze.height(); ++r)
    for (int c = 0; c < maze.width(); ++c) {
      const Cell cell{c, r};
      if (!seen.contains(cell)) continue;
      const Rgb base = detail::cell_color(maze, state, cell);
      const bool active_reward = maze.at(cell) == reward_of(state.context);
      const bool agent_here = cell == state.position;
      for (int y = 0; y < px; ++y)
        for (int x = 0; x < px; ++x) {
          const detail::Point local{(x + 0.5) / px, (y + 0.5) / px};
          Rgb color = base;
          if (active_reward) {
            const double ddx = local.x - 0.5;
            const double ddy = local.y - 0.5;
            if (ddx * ddx + ddy * ddy <= radius * radius) color = palette::kReward;
          }
          if (agent_here && detail::in_triangle(triangle, local)) color = palette::kAgent;
          frame.set(c * px + x, r * px + y, color);
        }
    }
  return frame;
}

// Binary PPM (P6).
inline std::string encode_ppm(const Frame& frame) {
  std::string out = "P6\n" + std::to_string(frame.width_px) + " " + std::to_string(frame.height_px) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.pixels.data()), frame.pixels.size());
  return out;
}

inline void write_ppm(const std::string& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const std::string bytes = encode_ppm(frame);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

inline constexpr int kObsSide = 84;

// Grayscale image with intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

using ProcessedObs = GrayImage;

namespace detail {

// weights[o] lists (source index, overlap fraction) pairs for output o; the
// fractions of each output sum to one.
inline std::vector<std::vector<std::pair<int, double>>> area_weights(int src, int dst) {
  std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(dst));
  for (int o = 0; o < dst; ++o) {
    // Output o covers source span [o*src/dst, (o+1)*src/dst), kept rational.
    const long long lo = static_cast<long long>(o) * src;
    const long long hi = static_cast<long long>(o + 1) * src;
    for (long long s = lo / dst; s * dst < hi; ++s) {
      const long long a = std::max(lo, s * dst);
      const long long b = std::min(hi, (s + 1) * dst);
      if (b > a) out[static_cast<std::size_t>(o)].push_back({static_cast<int>(s), static_cast<double>(b - a) / static_cast<double>(src)});
    }
  }
  return out;
}

}  // namespace detail

// Area-average resize; every output pixel is the mean over its source rectangle.
inline GrayImage resize_area(const GrayImage& src, int out_w, int out_h) {
  const auto wx = detail::area_weights(src.width, out_w);
  const auto wy = detail::area_weights(src.height, out_h);
  std::vector<double> rows(static_cast<std::size_t>(src.width) * static_cast<std::size_t>(out_h), 0.0);
  for (int oy = 0; oy < out_h; ++oy)
    for (auto [sy, w] : wy[static_cast<std::size_t>(oy)])
      for (int x = 0; x < src.width; ++x)
        rows[static_cast<std::size_t>(oy) * static_cast<std::size_t>(src.width) + static_cast<std::size_t>(x)] += w * src.at(x, sy);
  GrayImage out{out_w, out_h, std::vector<float>(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h), 0.0f)};
  for (int oy = 0; oy < out_h; ++oy)
    for (int ox = 0; ox < out_w; ++ox) {
      double acc = 0.0;
      for (auto [sx, w] : wx[static_cast<std::size_t>(ox)])
        acc += w * rows[static_cast<std::size_t>(oy) * static_cast<std::size_t>(src.width) + static_cast<std::size_t>(sx)];
      out.values[static_cast<std::size_t>(oy) * static_cast<std::size_t>(out_w) + static_cast<std::size_t>(ox)] =
          static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  return out;
}

inline GrayImage to_grayscale(const Frame& frame) {
  GrayImage g{frame.width_px, frame.height_px, {}};
  g.values.resize(static_cast<std::size_t>(frame.width_px) * static_cast<std::size_t>(frame.height_px));
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const double lum = 0.299 * frame.pixels[3 * i] + 0.587 * frame.pixels[3 * i + 1] + 0.114 * frame.pixels[3 * i + 2];
    g.values[i] = static_cast<float>(std::clamp(lum / 255.0, 0.0, 1.0));
  }
  return g;
}

inline ProcessedObs preprocess(const Frame& frame) {
  if (frame.width_px < 1 || frame.height_px < 1) throw std::invalid_argument("preprocess: empty frame");
  return resize_area(to_grayscale(frame), kObsSide, kObsSide);
}

}  // namespace ambimaze
