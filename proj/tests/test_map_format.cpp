#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ambimaze/agents/baseline.hpp"
#include "ambimaze/map_format.hpp"
#include "ambimaze/rng.hpp"
#include "test_util.hpp"
#include "oracles.hpp"

using namespace ambimaze;
using namespace oracles;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_diag(const ParseOutcome& r, int line, int col, const std::string& fragment) {
  for (const auto& d : r.diagnostics)
    if (d.line == line && d.column == col && d.message.find(fragment) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Golden, DefaultMapFileMatchesGenerator) {
  const auto path = std::filesystem::path(AMBIMAZE_SOURCE_DIR) / "maps" / "emaze.map";
  const std::string text = read_file(path);
  EXPECT_EQ(text, serialize_map(generate_emaze()));
  EXPECT_EQ(load_map(path.string()), generate_emaze());
}

TEST(Golden, DefaultMapShape) {
  const MazeSpec s = generate_emaze();
  EXPECT_EQ(s.width, 16);
  EXPECT_EQ(s.height, 16);
  EXPECT_EQ(s.max_moves, 250);
  EXPECT_DOUBLE_EQ(s.fov, 1.1 * std::numbers::pi);
  EXPECT_EQ(s.spawn_heading, Heading::N);
  EXPECT_TRUE(validate(s).empty());
}

TEST(RoundTrip, ThousandGeneratedMaps) {
  Rng rng = make_rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const MazeSpec s = random_spec(rng);
    const std::string text = serialize_map(s);
    const ParseOutcome r = try_parse_map(text);
    ASSERT_TRUE(r.ok()) << text << (r.diagnostics.empty() ? "" : r.diagnostics.front().to_string());
    ASSERT_EQ(*r.spec, s) << text;
    ASSERT_EQ(serialize_map(*r.spec), text);
  }
}

TEST(RoundTrip, MirrorIsAnInvolution) {
  const MazeSpec s = generate_emaze({4, 9, 1});
  EXPECT_EQ(mirror(mirror(s)), s);
  EXPECT_TRUE(validate(mirror(s)).empty());
}

TEST(Header, PiSuffixAndSortedCanonicalForm) {
  const MazeSpec s = testutil::grid({
      "###########",
      "#L..[.]..R#",
      "#####.#####",
      "#####.#####",
      "#####S#####",
      "###########",
  }, "spawn_heading: E\nmax_moves: 40\nfov: 0.5pi");
  EXPECT_DOUBLE_EQ(s.fov, 0.5 * std::numbers::pi);
  EXPECT_EQ(s.max_moves, 40);
  EXPECT_EQ(s.spawn_heading, Heading::E);
  const std::string text = serialize_map(s);
  EXPECT_EQ(text.substr(0, text.find("\n\n")), "fov: " + detail::format_double(0.5 * std::numbers::pi) +
                                                    "\nmax_moves: 40\nspawn_heading: E");
}

TEST(Diagnostics, UnknownCellCodeIsPositioned) {
  const ParseOutcome r = try_parse_map("max_moves: 10\n\n#####\n#L?R#\n#####\n");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(has_diag(r, 4, 3, "unknown cell code '?'")) << r.diagnostics.front().to_string();
}

TEST(Diagnostics, RaggedRow) {
  const ParseOutcome r = try_parse_map("#####\n#L.R\n#####\n");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(has_diag(r, 2, 5, "ragged grid"));
}

TEST(Diagnostics, HeaderProblems) {
  EXPECT_TRUE(has_diag(try_parse_map("fov: wide\n\n#S#\n"), 1, 6, "fov is not a number"));
  EXPECT_TRUE(has_diag(try_parse_map("colour: red\n\n#S#\n"), 1, 1, "unknown header key 'colour'"));
  EXPECT_TRUE(has_diag(try_parse_map("max_moves: 5\nmax_moves: 6\n\n#S#\n"), 2, 1, "duplicate header key"));
  EXPECT_TRUE(has_diag(try_parse_map("max_moves: -3\n\n#S#\n"), 1, 12, "positive integer"));
  EXPECT_TRUE(has_diag(try_parse_map("spawn_heading: up\n\n#S#\n"), 1, 16, "spawn_heading"));
  EXPECT_TRUE(has_diag(try_parse_map("no colon here\n\n#S#\n"), 1, 1, "key: value"));
}

TEST(Diagnostics, StructuralValidation) {
  // no spawn
  const ParseOutcome a = try_parse_map("###########\n#L..[.]..R#\n###########\n");
  ASSERT_FALSE(a.ok());
  EXPECT_TRUE(has_diag(a, 1, 1, "no spawn cell"));
  // unguarded right reward
  const ParseOutcome b = try_parse_map("###########\n#L..[S...R#\n###########\n");
  ASSERT_FALSE(b.ok());
  bool unguarded = false;
  for (const auto& d : b.diagnostics) unguarded = unguarded || d.message.find("unguarded") != std::string::npos;
  EXPECT_TRUE(unguarded);
  // missing left reward
  EXPECT_TRUE(has_diag(try_parse_map("#######\n#S.]R.#\n#######\n"), 1, 1, "missing left reward site"));
  // two spawns: second one is flagged at its cell
  const ParseOutcome c = try_parse_map("###########\n#L..[S]..R#\n#####S#####\n###########\n");
  ASSERT_FALSE(c.ok());
  EXPECT_TRUE(has_diag(c, 3, 6, "multiple spawn cells"));
}

TEST(Diagnostics, EmptyInput) {
  EXPECT_FALSE(try_parse_map("").ok());
  EXPECT_FALSE(try_parse_map("\n\n\n").ok());
  EXPECT_FALSE(try_parse_map("fov: 1\n\n").ok());
}

TEST(Diagnostics, ParseMapThrowsWithDiagnostics) {
  try {
    parse_map("#?#\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_FALSE(e.diagnostics().empty());
    EXPECT_EQ(e.diagnostics().front().to_string(), "1:2: unknown cell code '?'");
  }
}

TEST(Fuzz, RandomBytesNeverCrash) {
  Rng rng = make_rng(77);
  std::size_t accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = uniform_index(rng, 200);
    std::string bytes(n, '\0');
    for (auto& b : bytes) b = static_cast<char>(uniform_index(rng, 256));
    const ParseOutcome r = try_parse_map(bytes);
    if (r.ok()) {
      ++accepted;
    } else {
      ASSERT_FALSE(r.diagnostics.empty());
    }
  }
  EXPECT_EQ(accepted, 0u);
}

TEST(Fuzz, MutatedValidMapsNeverCrash) {
  // Mutations of a valid map reach deeper into validation than raw noise.
  Rng rng = make_rng(78);
  const std::string base = serialize_map(generate_emaze());
  static const char alphabet[] = "#.=[]LRCS\n :x";
  for (int i = 0; i < 10000; ++i) {
    std::string t = base;
    const int edits = 1 + static_cast<int>(uniform_index(rng, 4));
    for (int e = 0; e < edits; ++e)
      t[uniform_index(rng, t.size())] = alphabet[uniform_index(rng, sizeof alphabet - 1)];
    const ParseOutcome r = try_parse_map(t);
    if (r.ok()) {
      ASSERT_TRUE(validate(*r.spec).empty());
    } else {
      ASSERT_FALSE(r.diagnostics.empty());
    }
  }
}

TEST(Generator, RejectsBadParameters) {
  EXPECT_THROW(generate_emaze({2, 7, 2}), ValidationError);
  EXPECT_THROW(generate_emaze({6, 8, 2}), ValidationError);
  EXPECT_THROW(generate_emaze({6, 7, 0}), ValidationError);
}

TEST(Generator, EveryVariantIsSolvableInBothContexts) {
  for (int len = 3; len <= 8; ++len)
    for (int span = 5; span <= 11; span += 2)
      for (int k = 1; k <= 2; ++k) {
        const Maze m(generate_emaze({len, span, k}));
        for (Side side : {Side::Left, Side::Right}) {
          EnvState s = reset(m, 0);
          s.context = side;
          for (Action a : oracle_plan(m, side)) s = step(m, s, a).first;
          EXPECT_TRUE(s.terminated) << len << " " << span << " " << k;
        }
      }
}
