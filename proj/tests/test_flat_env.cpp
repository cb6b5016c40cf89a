#include <gtest/gtest.h>

#include <filesystem>

#include "ambimaze/flat_env.hpp"
#include "ambimaze/rng.hpp"

using namespace ambimaze;

TEST(FlatEnv, DefaultResetIsProcessed84) {
  FlatEnv env = FlatEnv::make("default");
  const FlatObs o = env.reset();
  EXPECT_EQ(o.height, 84);
  EXPECT_EQ(o.width, 84);
  EXPECT_EQ(o.channels, 1);
  ASSERT_EQ(o.values.size(), 84u * 84u);
  EXPECT_TRUE(o.pixels.empty());
  for (float v : o.values) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(FlatEnv, RawModeIsTheRenderedFrame) {
  FlatEnvOptions opt;
  opt.mode = ObsMode::Raw;
  FlatEnv env = FlatEnv::make("default", opt);
  const FlatObs o = env.reset();
  const Frame f = env.render();
  EXPECT_EQ(o.channels, 3);
  EXPECT_EQ(o.width, f.width_px);
  EXPECT_EQ(o.height, f.height_px);
  EXPECT_EQ(o.pixels, f.pixels);
  EXPECT_EQ(o.pixels.size(), static_cast<std::size_t>(o.width * o.height * 3));
}

TEST(FlatEnv, MapFileAndBadPath) {
  const auto path = (std::filesystem::path(AMBIMAZE_SOURCE_DIR) / "maps" / "emaze.map").string();
  FlatEnv a = FlatEnv::make(path);
  EXPECT_EQ(a.maze().spec(), generate_emaze());
  try {
    FlatEnv::make("/nonexistent/dir/some.map");
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/some.map"), std::string::npos);
  }
}

TEST(FlatEnv, OptionsOverrideTheMap) {
  FlatEnvOptions opt;
  opt.max_moves = 3;
  opt.fov = 0.5;
  FlatEnv env = FlatEnv::make("default", opt);
  EXPECT_EQ(env.maze().spec().max_moves, 3);
  EXPECT_DOUBLE_EQ(env.maze().spec().fov, 0.5);
  env.reset();
  EXPECT_FALSE(env.step(0).truncated);
  EXPECT_FALSE(env.step(0).truncated);
  EXPECT_TRUE(env.step(0).truncated);
  EXPECT_THROW(env.step(0), ContractViolation);
}

TEST(FlatEnv, SameSeedSameFirstObservation) {
  FlatEnvOptions opt;
  opt.seed = 42;
  for (int k = 0; k < 10; ++k) {
    FlatEnv a = FlatEnv::make("default", opt), b = FlatEnv::make("default", opt);
    EXPECT_EQ(a.reset().values, b.reset().values);
    EXPECT_EQ(a.state().context, b.state().context);
    opt.seed += 1;
  }
}

TEST(FlatEnv, RejectsBadActions) {
  FlatEnv env = FlatEnv::make("default");
  env.reset();
  EXPECT_THROW(env.step(5), std::invalid_argument);
  EXPECT_THROW(env.step(-1), std::invalid_argument);
  try {
    env.step(4);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("action 4"), std::string::npos);
  }
}

TEST(FlatEnv, ParityWithNativeLoop) {
  // Same seed and action script, driven natively and through the facade.
  FlatEnvOptions opt;
  opt.seed = 7;
  opt.max_moves = 60;
  FlatEnv flat = FlatEnv::make("default", opt);
  MazeSpec spec = generate_emaze();
  spec.max_moves = 60;
  const Maze maze(spec);
  Environment native(maze, 7);
  Rng script = make_rng(99);
  FlatObs fo = flat.reset();
  native.reset();
  ASSERT_EQ(fo.values, preprocess(render(maze, native.state())).values);
  int episodes = 0;
  for (int t = 0; t < 1000; ++t) {
    const int a = static_cast<int>(uniform_index(script, 4));
    const FlatStep fs = flat.step(a);
    const StepResult ns = native.step(static_cast<Action>(a));
    ASSERT_EQ(fs.reward, static_cast<double>(ns.reward)) << t;
    ASSERT_EQ(fs.terminated, ns.terminated) << t;
    ASSERT_EQ(fs.truncated, ns.truncated) << t;
    ASSERT_EQ(fs.obs.values, preprocess(render(maze, native.state())).values) << t;
    if (fs.terminated || fs.truncated) {
      ++episodes;
      flat.reset();
      native.reset();
      ASSERT_EQ(flat.state().context, native.state().context);
    }
  }
  EXPECT_GE(episodes, 15);
}

TEST(FlatEnv, RewardOncePerSuccessfulEpisode) {
  FlatEnvOptions opt;
  opt.max_moves = 10000;
  opt.mode = ObsMode::Raw;
  FlatEnv env = FlatEnv::make("default", opt);
  Rng rng = make_rng(5);
  int successes = 0;
  for (int ep = 0; ep < 12; ++ep) {
    env.reset();
    double total = 0;
    FlatStep s;
    do {
      s = env.step(static_cast<int>(uniform_index(rng, 4)));
      total += s.reward;
      EXPECT_TRUE(s.reward == 0.0 || s.reward == 1.0);
    } while (!s.terminated && !s.truncated);
    EXPECT_EQ(total, s.terminated ? 1.0 : 0.0);
    successes += s.terminated ? 1 : 0;
  }
  EXPECT_GT(successes, 0);
}

TEST(FlatEnv, ManyMakeDestroyCycles) {
  for (int i = 0; i < 2000; ++i) {
    FlatEnvOptions opt;
    opt.seed = static_cast<std::uint64_t>(i);
    FlatEnv env = FlatEnv::make("default", opt);
    env.reset();
    env.step(1);
  }
  SUCCEED();
}
