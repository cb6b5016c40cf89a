#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ambimaze/agents/baseline.hpp"
#include "ambimaze/agents/dqn.hpp"
#include "ambimaze/agents/ppo.hpp"
#include "ambimaze/harness/config.hpp"
#include "ambimaze/harness/metrics.hpp"
#include "ambimaze/map_format.hpp"

namespace ambimaze {

inline MazeSpec experiment_map(const ExperimentConfig& c) {
  MazeSpec spec = c.map == "default" ? generate_emaze() : load_map(c.map);
  if (c.max_moves) spec.max_moves = *c.max_moves;
  if (c.fov) spec.fov = *c.fov;
  return spec;
}

struct SeedResult {
  std::uint64_t seed = 0;
  MetricSeries series;
  std::size_t env_steps = 0;
  std::string loss_csv;  // empty for agents that do not train a network
  std::vector<std::string> events;
  std::optional<std::size_t> intrinsic_off_episode;
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregate;
  std::filesystem::path directory;  // empty when nothing was written

  std::vector<double> final_rolling() const {
    std::vector<double> out;
    for (const auto& s : seeds) out.push_back(s.series.final_rolling());
    return out;
  }
};

namespace detail {

inline std::unique_ptr<Policy> make_policy(const ExperimentConfig& c, const Maze& maze, std::uint64_t seed) {
  switch (c.agent) {
    case AgentKind::Random: return std::make_unique<RandomAgent>();
    case AgentKind::Oracle: return std::make_unique<OracleAgent>();
    case AgentKind::QBeliefFree:
    case AgentKind::QBelief: return std::make_unique<TabularQAgent>(c.tabular);
    case AgentKind::Dqn: return std::make_unique<DqnAgent>(maze, c.encoder, c.dqn, derive_seed(seed, 0xa9));
    default: break;
  }
  throw std::logic_error("make_policy: not a step-wise agent");
}

inline SeedResult run_policy_seed(const ExperimentConfig& c, const Maze& maze, std::uint64_t seed) {
  SeedResult out;
  out.seed = seed;
  auto policy = make_policy(c, maze, seed);
  auto* dqn = dynamic_cast<DqnAgent*>(policy.get());
  if (dqn) out.loss_csv = "phase,loss\n";
  std::size_t phase = 0;
  Environment env(maze, derive_seed(seed, 0xe0));
  Rng rng = make_rng(derive_seed(seed, 0xa0));
  const auto t0 = std::chrono::steady_clock::now();
  while (true) {
    if (c.episodes && out.series.size() >= *c.episodes) break;
    if (c.budget_steps && out.env_steps >= *c.budget_steps) break;
    const double progress = c.budget_steps ? static_cast<double>(out.env_steps) / static_cast<double>(*c.budget_steps)
                                           : static_cast<double>(out.series.size()) / static_cast<double>(*c.episodes);
    env.reset();
    Observation obs = observe(maze, env.state());
    policy->episode_start(obs, TrainingClock{progress});
    int ret = 0;
    while (!env.state().done()) {
      const Action a = policy->act(obs, rng);
      const StepResult r = env.step(a);
      ++out.env_steps;
      Observation next = observe(maze, env.state());
      policy->observe(Transition{obs, a, r.reward, next, r.terminated, r.truncated});
      ret += r.reward;
      obs = next;
    }
    policy->episode_end();
    if (dqn) {
      for (double loss : dqn->take_losses()) out.loss_csv += std::to_string(++phase) + ',' + format_double(loss) + '\n';
    }
    out.series.push(ret, env.state().steps_taken,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  out.series.finalize(c.window);
  return out;
}

inline SeedResult run_ppo_seed(const ExperimentConfig& c, const Maze& maze, std::uint64_t seed) {
  SeedResult out;
  out.seed = seed;
  std::vector<std::unique_ptr<EpisodicTask>> tasks;
  for (std::size_t e = 0; e < c.ppo.parallel_envs; ++e)
    tasks.push_back(std::make_unique<MazeTask>(maze, c.encoder, derive_seed(seed, 0x100 + e)));
  PpoTrainer trainer(std::move(tasks), c.ppo, c.intrinsic, derive_seed(seed, 0xa1), c.window);
  out.loss_csv = "update,policy_loss,value_loss,entropy,intrinsic_mean\n";
  std::vector<EpisodeRecord> done;
  const auto t0 = std::chrono::steady_clock::now();
  while (true) {
    if (c.episodes && done.size() >= *c.episodes) break;
    if (c.budget_steps && out.env_steps >= *c.budget_steps) break;
    const bool was_active = trainer.intrinsic_active();
    const PpoLosses l = trainer.iterate(done);
    out.env_steps += trainer.steps_per_iteration();
    out.loss_csv += std::to_string(trainer.updates()) + ',' + format_double(l.policy_loss) + ',' +
                    format_double(l.value_loss) + ',' + format_double(l.entropy) + ',' +
                    format_double(l.intrinsic_mean) + '\n';
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    while (out.series.size() < done.size()) {
      const auto& rec = done[out.series.size()];
      out.series.push(rec.episode_return, rec.steps, elapsed);
    }
    if (was_active && !trainer.intrinsic_active() && trainer.deactivated_at()) {
      out.intrinsic_off_episode = trainer.deactivated_at();
      out.events.push_back("episode " + std::to_string(*trainer.deactivated_at()) + ": intrinsic bonus off (rolling success >= " +
                           format_double(c.intrinsic.off_threshold) + " over " + std::to_string(c.window) +
                           " episodes)");
    }
  }
  if (c.episodes && out.series.size() > *c.episodes) {
    const auto n = static_cast<std::ptrdiff_t>(*c.episodes);
    out.series.returns.erase(out.series.returns.begin() + n, out.series.returns.end());
    out.series.steps.erase(out.series.steps.begin() + n, out.series.steps.end());
    out.series.wall_seconds.erase(out.series.wall_seconds.begin() + n, out.series.wall_seconds.end());
  }
  out.series.finalize(c.window);
  return out;
}

}  // namespace detail

// One full training run for one seed. Independent of any other seed.
inline SeedResult run_seed(const ExperimentConfig& c, const Maze& maze, std::uint64_t seed) {
  return is_ppo(c.agent) ? detail::run_ppo_seed(c, maze, seed) : detail::run_policy_seed(c, maze, seed);
}

// Runs seeds seed_base .. seed_base + seeds - 1 in order. With `write`, the
// artifacts go to <output_dir>/<name>/.
inline ExperimentResult run_experiment(const ExperimentConfig& c, bool write = true) {
  if (auto p = c.problems(); !p.empty()) throw ConfigError(p.front());
  const Maze maze(experiment_map(c));
  ExperimentResult result;
  for (std::size_t k = 0; k < c.seeds; ++k) result.seeds.push_back(run_seed(c, maze, c.seed_base + k));
  std::vector<MetricSeries> all;
  for (const auto& s : result.seeds) all.push_back(s.series);
  result.aggregate = aggregate(all);
  if (!write) return result;

  namespace fs = std::filesystem;
  result.directory = fs::path(c.output_dir) / c.name;
  fs::create_directories(result.directory);
  auto path = [&](const std::string& file) { return (result.directory / file).string(); };
  for (const auto& s : result.seeds) {
    const std::string tag = std::to_string(s.seed);
    write_text_file(path("seed_" + tag + ".csv"), series_csv(s.series));
    if (!s.loss_csv.empty()) write_text_file(path("loss_seed_" + tag + ".csv"), s.loss_csv);
    if (c.intrinsic.kind != IntrinsicKind::None) {
      std::string log;
      for (const auto& e : s.events) log += e + '\n';
      write_text_file(path("events_seed_" + tag + ".log"), log);
    }
  }
  write_text_file(path("aggregate.csv"), aggregate_csv(result.aggregate));
  write_text_file(path("config.resolved"), resolved_config(c));
  return result;
}

}  // namespace ambimaze
