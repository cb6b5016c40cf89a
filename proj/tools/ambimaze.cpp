#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ambimaze/ambimaze.hpp"

using namespace ambimaze;

namespace {

constexpr int kUsageError = 2;

MazeSpec load(const std::string& source) { return source == "default" ? generate_emaze() : load_map(source); }

std::vector<Action> parse_actions(const std::string& text) {
  std::vector<Action> out;
  for (auto part : detail::split(text, ',')) {
    const std::string t = detail::trimmed(part);
    if (t.empty()) continue;
    out.push_back(action_from_index(static_cast<int>(parse_integer(t))));
  }
  return out;
}

char heading_glyph(Heading h) {
  static constexpr char glyphs[] = {'^', '/', '>', '\\', 'v', '/', '<', '\\'};
  return glyphs[static_cast<int>(h)];
}

char cell_glyph(const Maze& maze, const EnvState& s, Cell c) {
  switch (maze.at(c)) {
    case CellKind::Wall: return '#';
    case CellKind::Window: return '=';
    case CellKind::GateLeft: return s.gate_closed[0] ? '#' : '[';
    case CellKind::GateRight: return s.gate_closed[1] ? '#' : ']';
    case CellKind::RewardLeft: return s.context == Side::Left ? '*' : '.';
    case CellKind::RewardRight: return s.context == Side::Right ? '*' : '.';
    case CellKind::Clue: return s.context == Side::Left ? 'b' : 'g';
    default: return '.';
  }
}

void print_view(const Maze& maze, const EnvState& s) {
  const CellSet seen = visible_cells(maze, s);
  for (int r = 0; r < maze.height(); ++r) {
    std::string line;
    for (int c = 0; c < maze.width(); ++c) {
      const Cell cell{c, r};
      if (cell == s.position)
        line += heading_glyph(s.heading);
      else
        line += seen.contains(cell) ? cell_glyph(maze, s, cell) : ' ';
    }
    std::cout << line << '\n';
  }
  std::cout << "step " << s.steps_taken << '/' << maze.spec().max_moves << "  heading " << to_string(s.heading)
            << '\n';
}

int cmd_map_check(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kUsageError;
  }
  const ParseOutcome r = try_parse_map(text);
  if (r.ok()) {
    std::cout << path << ": ok (" << r.spec->width << "x" << r.spec->height << ")\n";
    return 0;
  }
  for (const auto& d : r.diagnostics) std::cerr << path << ':' << d.to_string() << '\n';
  return kUsageError;
}

int cmd_render(const std::string& map, const std::string& actions, const std::string& out_dir, std::uint64_t seed) {
  const Maze maze(load(map));
  const auto plan = parse_actions(actions);
  std::filesystem::create_directories(out_dir);
  EnvState s = reset(maze, seed);
  auto frame_path = [&](std::size_t i) {
    std::string n = std::to_string(i);
    n.insert(0, n.size() < 4 ? 4 - n.size() : 0, '0');
    return (std::filesystem::path(out_dir) / ("frame_" + n + ".ppm")).string();
  };
  std::size_t i = 0;
  write_ppm(frame_path(i++), render(maze, s));
  for (Action a : plan) {
    if (s.done()) break;
    s = step(maze, s, a).first;
    write_ppm(frame_path(i++), render(maze, s));
  }
  std::cout << "wrote " << i << " frames to " << out_dir << '\n';
  return 0;
}

int cmd_oracle(const std::string& map) {
  const Maze maze(load(map));
  bool ok = true;
  for (Side side : {Side::Left, Side::Right}) {
    try {
      const auto plan = oracle_plan(maze, side);
      EnvState s = reset(maze, 0);
      s.context = side;
      int reward = 0;
      for (Action a : plan) {
        if (s.done()) break;
        auto [next, r] = step(maze, s, a);
        s = next;
        reward += r.reward;
      }
      const bool solved = reward == 1 && s.terminated;
      std::cout << to_string(side) << ": " << plan.size() << " actions, " << (solved ? "solved" : "FAILED") << '\n';
      ok = ok && solved;
    } catch (const PlanningError& e) {
      std::cout << to_string(side) << ": planning error: " << e.what() << '\n';
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

int cmd_play(const std::string& map, std::uint64_t seed) {
  const Maze maze(load(map));
  EnvState s = reset(maze, seed);
  std::cout << "w forward, a/d turn, s wait, q quit\n";
  print_view(maze, s);
  std::string line;
  while (!s.done() && std::getline(std::cin, line)) {
    if (line.empty()) continue;
    Action a;
    switch (line[0]) {
      case 'w': a = Action::Forward; break;
      case 'a': a = Action::TurnLeft; break;
      case 'd': a = Action::TurnRight; break;
      case 's': a = Action::Noop; break;
      case 'q': return 0;
      default: std::cout << "unknown key '" << line[0] << "'\n"; continue;
    }
    auto [next, r] = step(maze, s, a);
    s = next;
    print_view(maze, s);
    if (r.reward) std::cout << "reward!\n";
  }
  if (s.truncated) std::cout << "out of moves\n";
  return 0;
}

int cmd_baseline_random(const std::string& map, std::size_t episodes, std::optional<int> max_moves,
                        std::uint64_t seed) {
  MazeSpec spec = load(map);
  if (max_moves) spec.max_moves = *max_moves;
  const Maze maze(std::move(spec));
  Environment env(maze, seed);
  Rng rng = make_rng(derive_seed(seed, 0xa0));
  std::size_t wins = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    env.reset();
    while (!env.state().done()) wins += static_cast<std::size_t>(env.step(random_policy(rng)).reward);
  }
  std::cout << "success rate " << format_double(static_cast<double>(wins) / static_cast<double>(episodes)) << " ("
            << wins << '/' << episodes << ", max_moves " << maze.spec().max_moves << ")\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig c = parse_experiment_config(read_text_file(config_path));
  const ExperimentResult r = run_experiment(c);
  for (const auto& s : r.seeds) {
    std::cout << "seed " << s.seed << ": " << s.series.size() << " episodes, final rolling "
              << format_double(s.series.final_rolling()) << '\n';
    for (const auto& e : s.events) std::cout << "  " << e << '\n';
  }
  std::cout << "wrote " << r.directory.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ambimaze: E-maze environment, agents and experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "experiment config")->required();

  auto* map_cmd = app.add_subcommand("map", "map file utilities");
  map_cmd->require_subcommand(1);
  std::string check_path, print_path;
  auto* check = map_cmd->add_subcommand("check", "parse and validate a map");
  check->add_option("path", check_path)->required();
  auto* print = map_cmd->add_subcommand("print", "print the canonical form of a map (or 'default')");
  print->add_option("path", print_path)->required();

  std::string map = "default", actions, out_dir;
  std::uint64_t seed = 0;
  auto* render_cmd = app.add_subcommand("render", "write one PPM frame per step");
  render_cmd->add_option("--map", map, "map path or 'default'")->required();
  render_cmd->add_option("--actions", actions, "comma-separated action indices")->required();
  render_cmd->add_option("--out", out_dir, "output directory")->required();
  render_cmd->add_option("--seed", seed, "reset seed");

  auto* oracle = app.add_subcommand("oracle", "plan and verify the scripted solution for both contexts");
  oracle->add_option("--map", map, "map path or 'default'")->required();

  auto* play = app.add_subcommand("play", "step through the maze from the terminal");
  play->add_option("--map", map, "map path or 'default'")->required();
  play->add_option("--seed", seed, "reset seed");

  std::size_t episodes = 1000;
  std::optional<int> max_moves;
  auto* random = app.add_subcommand("baseline-random", "success rate of the uniform random policy");
  random->add_option("--map", map, "map path or 'default'")->required();
  random->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  random->add_option("--max-moves", max_moves)->check(CLI::PositiveNumber);
  random->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*check) return cmd_map_check(check_path);
    if (*print) {
      std::cout << serialize_map(load(print_path));
      return 0;
    }
    if (*render_cmd) return cmd_render(map, actions, out_dir, seed);
    if (*oracle) return cmd_oracle(map);
    if (*play) return cmd_play(map, seed);
    if (*random) return cmd_baseline_random(map, episodes, max_moves, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
