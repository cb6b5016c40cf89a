#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ambimaze/agents/baseline.hpp"
#include "ambimaze/map_format.hpp"
#include "ambimaze/percept.hpp"
#include "test_util.hpp"
#include "oracles.hpp"

using namespace ambimaze;
using namespace oracles;

namespace {

constexpr double kPi = std::numbers::pi;

EnvState with_pose(const Maze& m, Cell c, Heading h, Side ctx = Side::Left) {
  EnvState s = reset(m, 0);
  s.position = c;
  s.heading = h;
  s.context = ctx;
  return s;
}

bool frame_has(const Frame& f, Rgb color) {
  for (int y = 0; y < f.height_px; ++y)
    for (int x = 0; x < f.width_px; ++x)
      if (f.at(x, y) == color) return true;
  return false;
}

bool cell_has(const Frame& f, int px, Cell c, Rgb color) {
  for (int y = 0; y < px; ++y)
    for (int x = 0; x < px; ++x)
      if (f.at(c.col * px + x, c.row * px + y) == color) return true;
  return false;
}

}  // namespace

TEST(Visibility, OwnCellAlwaysVisible) {
  Rng rng = make_rng(1);
  for (int i = 0; i < 200; ++i) {
    Geometry g = random_geometry(rng);
    const Maze m(g.spec);
    EXPECT_TRUE(visible_cells(m, g.state).contains(g.state.position));
  }
}

TEST(Visibility, CellBehindWallIsHidden) {
  const Maze m(testutil::grid({
      "###########",
      "#L[.....]R#",
      "###.....###",
      "#....#....#",
      "#.........#",
      "#....S....#",
      "###########",
  }));
  const EnvState s = with_pose(m, {5, 5}, Heading::N);
  EXPECT_TRUE(cell_visible(m, s, {5, 4}));
  EXPECT_FALSE(cell_visible(m, s, {5, 2}));
  EXPECT_FALSE(cell_visible(m, s, {5, 1}));
}

TEST(Visibility, RewardSeenThroughWindow) {
  // Default map: standing in the middle prong beside the left window,
  // facing west, the left reward site is in view through the glass.
  const Maze m(generate_emaze());
  const Cell reward = m.reward_cells(Side::Left).back();
  const EnvState s = with_pose(m, {7, reward.row}, Heading::W, Side::Left);
  ASSERT_EQ(m.at({6, reward.row}), CellKind::Window);
  EXPECT_TRUE(cell_visible(m, s, reward));
  EXPECT_EQ(reward_visible(m, s), Side::Left);
  const EnvState other = with_pose(m, {7, reward.row}, Heading::W, Side::Right);
  EXPECT_FALSE(reward_visible(m, other).has_value());
}

TEST(Visibility, NothingDisclosedAtReset) {
  const Maze m(generate_emaze());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EnvState s = reset(m, seed);
    EXPECT_FALSE(reward_visible(m, s).has_value());
    EXPECT_FALSE(frame_has(render(m, s), palette::kReward));
  }
}

TEST(Visibility, ClueDisclosesContext) {
  const Maze m(testutil::grid({
      "###########",
      "#L..[.]..R#",
      "#####.#####",
      "#####C#####",
      "#####S#####",
      "###########",
  }));
  EXPECT_EQ(reward_visible(m, with_pose(m, {5, 4}, Heading::N, Side::Right)), Side::Right);
  EXPECT_EQ(reward_visible(m, with_pose(m, {5, 4}, Heading::N, Side::Left)), Side::Left);
  EXPECT_FALSE(reward_visible(m, with_pose(m, {5, 4}, Heading::S, Side::Right)).has_value());
  const Frame f = render(m, with_pose(m, {5, 4}, Heading::N, Side::Right));
  EXPECT_TRUE(cell_has(f, m.spec().cell_px, {5, 3}, palette::kClueRight));
}

TEST(VisibilityProperty, MatchesIndependentOracle) {
  Rng rng = make_rng(2);
  for (int i = 0; i < 1000; ++i) {
    Geometry g = random_geometry(rng);
    const Maze m(g.spec);
    const CellSet seen = visible_cells(m, g.state);
    for (int r = 0; r < m.height(); ++r)
      for (int c = 0; c < m.width(); ++c)
        ASSERT_EQ(seen.contains({c, r}), oracle_visible(m, g.state, {c, r}))
            << "geometry " << i << " cell " << c << "," << r << " from " << g.state.position.col << ","
            << g.state.position.row << " heading " << to_string(g.state.heading) << " gates " << g.state.gate_closed[0]
            << g.state.gate_closed[1] << "\n" << serialize_map(g.spec);
  }
}

TEST(VisibilityProperty, OcclusionMonotonicity) {
  Rng rng = make_rng(3);
  int checked = 0;
  while (checked < 1000) {
    Geometry g = random_geometry(rng);
    const Maze before(g.spec);
    const CellSet a = visible_cells(before, g.state);
    const Cell extra{1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(g.spec.width - 2))),
                     1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(g.spec.height - 2)))};
    const CellKind k = g.spec.at(extra);
    if (extra == g.state.position || k == CellKind::Spawn || reward_side(k)) continue;
    g.spec.at(extra) = CellKind::Wall;
    const Maze after(g.spec);
    ASSERT_TRUE(visible_cells(after, g.state).is_subset_of(a));
    ++checked;
  }
}

TEST(VisibilityProperty, FovMonotonicity) {
  Rng rng = make_rng(4);
  for (int i = 0; i < 1000; ++i) {
    Geometry g = random_geometry(rng);
    double f1 = (0.01 + 1.99 * uniform01(rng)) * kPi;
    double f2 = (0.01 + 1.99 * uniform01(rng)) * kPi;
    if (f1 > f2) std::swap(f1, f2);
    g.spec.fov = f1;
    const CellSet narrow = visible_cells(Maze(g.spec), g.state);
    g.spec.fov = f2;
    const CellSet wide = visible_cells(Maze(g.spec), g.state);
    ASSERT_TRUE(narrow.is_subset_of(wide));
  }
}

TEST(VisibilityProperty, WindowTransparency) {
  // Replacing every window with floor changes nothing about what is seen.
  Rng rng = make_rng(5);
  for (int i = 0; i < 1000; ++i) {
    Geometry g = random_geometry(rng, 0.2, 0.3);
    const CellSet with_windows = visible_cells(Maze(g.spec), g.state);
    for (auto& k : g.spec.cells)
      if (k == CellKind::Window) k = CellKind::Floor;
    ASSERT_EQ(visible_cells(Maze(g.spec), g.state), with_windows);
  }
}

TEST(VisibilityProperty, HalfAngleBoundary) {
  // Offsets (8, 1) and (5, 1) from the heading's perpendicular sit at
  // 0.5396pi and 0.5628pi from the heading; the half angle is 0.55pi.
  Rng rng = make_rng(6);
  int checked = 0;
  while (checked < 1000) {
    Geometry g = random_geometry(rng, 0.0, 0.0, 0.0);
    g.spec.fov = 1.1 * kPi;
    const Maze m(g.spec);
    const int quarter = static_cast<int>(uniform_index(rng, 4));
    g.state.heading = static_cast<Heading>(2 * quarter);
    const Offset fwd = offset_of(g.state.heading);
    const int side = coin_flip(rng) ? 1 : -1;
    const Offset right{-fwd.dy * side, fwd.dx * side};
    auto target = [&](int along, int back) {
      return Cell{g.state.position.col + along * right.dx - back * fwd.dx,
                  g.state.position.row + along * right.dy - back * fwd.dy};
    };
    const Cell in = target(8, 1);
    const Cell out = target(5, 1);
    if (!m.in_bounds(in) || !m.in_bounds(out)) continue;
    EnvState open = g.state;
    open.gate_closed = {false, false};
    // Only the sealed pockets can obstruct; skip geometries where they do.
    MazeSpec all_round = g.spec;
    all_round.fov = 2 * kPi;
    const Maze full(all_round);
    if (!oracle_visible(full, open, in) || !oracle_visible(full, open, out)) continue;
    const double ang_in = std::acos(-1.0 / std::hypot(8.0, 1.0));
    const double ang_out = std::acos(-1.0 / std::hypot(5.0, 1.0));
    ASSERT_LT(ang_in, 0.55 * kPi);
    ASSERT_GT(ang_out, 0.55 * kPi);
    ASSERT_TRUE(cell_visible(m, open, in)) << checked;
    ASSERT_FALSE(cell_visible(m, open, out)) << checked;
    ++checked;
  }
}

TEST(Render, FrameSizeFollowsCellSize) {
  Rng rng = make_rng(7);
  for (int i = 0; i < 20; ++i) {
    Geometry g = random_geometry(rng);
    g.spec.cell_px = 1 + static_cast<int>(uniform_index(rng, 12));
    const Maze m(g.spec);
    const Frame f = render(m, g.state);
    EXPECT_EQ(f.width_px, g.spec.width * g.spec.cell_px);
    EXPECT_EQ(f.height_px, g.spec.height * g.spec.cell_px);
    EXPECT_EQ(f.pixels.size(), static_cast<std::size_t>(f.width_px * f.height_px * 3));
  }
}

TEST(Render, Deterministic) {
  const Maze m(generate_emaze());
  const EnvState s = reset(m, 4);
  EXPECT_EQ(render(m, s), render(m, s));
  EXPECT_EQ(encode_ppm(render(m, s)), encode_ppm(render(m, s)));
}

TEST(Render, FullFovWithoutObstaclesHasNoBlack) {
  const Maze m(testutil::grid({"L[..S..]R"}, "fov: 2pi"));
  const Frame f = render(m, reset(m, 0));
  EXPECT_FALSE(frame_has(f, palette::kHidden));
}

TEST(Render, PaletteForKnownCells) {
  const Maze m(generate_emaze());
  const Cell reward = m.reward_cells(Side::Left).back();
  const EnvState s = with_pose(m, {7, reward.row}, Heading::W, Side::Left);
  const Frame f = render(m, s);
  const int px = m.spec().cell_px;
  EXPECT_EQ(f.at(6 * px + px / 2, reward.row * px + px / 2), palette::kWindow);
  EXPECT_EQ(f.at(reward.col * px + px / 2, reward.row * px + px / 2), palette::kReward);
  EXPECT_EQ(f.at(reward.col * px, reward.row * px), palette::kFloor);  // corner lies outside the disc
  EXPECT_EQ(f.at(7 * px + px / 2, reward.row * px + px / 2), palette::kAgent);
  EXPECT_EQ(f.at(0, 0), palette::kHidden);  // behind the agent
}

TEST(Render, ClosedGateDrawnAsWall) {
  const Maze m(testutil::small_t());
  EnvState s = with_pose(m, {3, 1}, Heading::E);
  s.gate_closed[0] = true;
  const int px = m.spec().cell_px;
  const Frame f = render(m, s);
  EXPECT_EQ(f.at(4 * px + 1, 1 * px + 1), palette::kWall);
  EXPECT_FALSE(cell_visible(m, s, {5, 1}));
}

TEST(RenderProperty, NonBlackPixelsLieInVisibleCells) {
  Rng rng = make_rng(8);
  for (int i = 0; i < 300; ++i) {
    Geometry g = random_geometry(rng);
    g.spec.cell_px = 4;
    const Maze m(g.spec);
    const CellSet seen = visible_cells(m, g.state);
    const Frame f = render(m, g.state);
    for (int y = 0; y < f.height_px; ++y)
      for (int x = 0; x < f.width_px; ++x)
        if (!(f.at(x, y) == palette::kHidden)) {
          ASSERT_TRUE(seen.contains({x / 4, y / 4}));
        }
  }
}

TEST(RenderProperty, DisclosureAgreesWithFrame) {
  // Along random rollouts on the default map with an added clue cell,
  // reward_visible reports a side exactly when the disclosing cell shows.
  MazeSpec spec = generate_emaze();
  spec.at({1, 1}) = CellKind::Clue;
  const Maze m(spec);
  const int px = m.spec().cell_px;
  Rng rng = make_rng(9);
  int disclosed = 0;
  for (int ep = 0; ep < 60; ++ep) {
    EnvState s = reset(m, static_cast<std::uint64_t>(ep));
    while (!s.done()) {
      const Frame f = render(m, s);
      bool shown = false;
      for (Cell c : m.reward_cells(s.context)) shown = shown || cell_has(f, px, c, palette::kReward);
      const Rgb clue = s.context == Side::Left ? palette::kClueLeft : palette::kClueRight;
      for (Cell c : m.clue_cells()) shown = shown || cell_has(f, px, c, clue);
      const auto side = reward_visible(m, s);
      ASSERT_EQ(side.has_value(), shown);
      if (side) {
        ASSERT_EQ(*side, s.context);
        ++disclosed;
      }
      s = step(m, s, random_policy(rng)).first;
    }
  }
  EXPECT_GT(disclosed, 0);
}

TEST(Preprocess, BlackAndWhite) {
  Frame black(128, 128);
  for (float v : preprocess(black).values) ASSERT_EQ(v, 0.0f);
  Frame white(128, 96);
  std::fill(white.pixels.begin(), white.pixels.end(), std::uint8_t{255});
  const ProcessedObs o = preprocess(white);
  EXPECT_EQ(o.width, kObsSide);
  EXPECT_EQ(o.height, kObsSide);
  for (float v : o.values) ASSERT_NEAR(v, 1.0f, 1e-6);
}

TEST(Preprocess, HalfBlackHalfWhiteColumns) {
  for (int w : {128, 100, 37}) {
    Frame f(w, 50);
    for (int y = 0; y < f.height_px; ++y)
      for (int x = 0; x < w; x += 2) f.set(x, y, {255, 255, 255});
    const ProcessedObs o = preprocess(f);
    double mean = 0;
    for (float v : o.values) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
      mean += v;
    }
    mean /= static_cast<double>(o.values.size());
    const double expected = static_cast<double>((w + 1) / 2) / w;
    EXPECT_NEAR(mean, expected, 0.01) << w;
  }
}

TEST(Preprocess, LuminanceWeights) {
  Frame f(84, 84);
  for (int y = 0; y < 84; ++y)
    for (int x = 0; x < 84; ++x) f.set(x, y, {200, 0, 0});
  const ProcessedObs o = preprocess(f);
  EXPECT_NEAR(o.values[0], 0.299 * 200 / 255.0, 1e-6);
}

TEST(Preprocess, AreaAverageIsExactOnBlocks) {
  GrayImage g{4, 2, {0, 1, 1, 1, 0, 0, 1, 0}};
  const GrayImage r = resize_area(g, 2, 1);
  EXPECT_FLOAT_EQ(r.values[0], 0.25f);
  EXPECT_FLOAT_EQ(r.values[1], 0.75f);
  EXPECT_THROW(preprocess(Frame{}), std::invalid_argument);
}

TEST(Ppm, HeaderAndPayload) {
  Frame f(3, 2);
  f.set(2, 1, {1, 2, 3});
  const std::string ppm = encode_ppm(f);
  const std::string header = "P6\n3 2\n255\n";
  ASSERT_EQ(ppm.substr(0, header.size()), header);
  EXPECT_EQ(ppm.size(), header.size() + 18);
  EXPECT_EQ(ppm.substr(ppm.size() - 3), std::string("\x01\x02\x03", 3));
}
