#pragma once

#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ambimaze/agents/baseline.hpp"
#include "ambimaze/agents/dqn.hpp"
#include "ambimaze/agents/encoder.hpp"
#include "ambimaze/agents/intrinsic.hpp"
#include "ambimaze/agents/ppo.hpp"
#include "ambimaze/harness/metrics.hpp"

namespace ambimaze {

enum class AgentKind { Random, Oracle, QBeliefFree, QBelief, Dqn, Ppo, PpoRnd, PpoIcm };

inline constexpr std::pair<AgentKind, std::string_view> kAgentNames[] = {
    {AgentKind::Random, "random"}, {AgentKind::Oracle, "oracle"},   {AgentKind::QBeliefFree, "q_belief_free"},
    {AgentKind::QBelief, "q_belief"}, {AgentKind::Dqn, "dqn"},        {AgentKind::Ppo, "ppo"},
    {AgentKind::PpoRnd, "ppo_rnd"},  {AgentKind::PpoIcm, "ppo_icm"},
};

inline std::string_view agent_name(AgentKind k) {
  for (const auto& [kind, name] : kAgentNames)
    if (kind == k) return name;
  return "?";
}

inline AgentKind agent_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kAgentNames)
    if (name == s) return kind;
  throw std::invalid_argument("unknown agent '" + std::string(s) + "'");
}

inline bool is_ppo(AgentKind k) { return k == AgentKind::Ppo || k == AgentKind::PpoRnd || k == AgentKind::PpoIcm; }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string map = "default";  // path, or "default" for the generated E-maze
  AgentKind agent = AgentKind::Random;
  std::size_t seeds = 10;
  std::uint64_t seed_base = 0;
  std::optional<std::size_t> episodes;      // per seed
  std::optional<std::size_t> budget_steps;  // per seed; also the clock for annealed schedules
  std::size_t window = 100;
  std::string output_dir = "runs";
  bool paper_scale = false;
  std::optional<int> max_moves;  // overrides the map
  std::optional<double> fov;

  EncoderMode encoder = EncoderMode::Compact;
  TabularConfig tabular;
  DqnConfig dqn;
  PpoConfig ppo;
  IntrinsicConfig intrinsic;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (seeds < 1) out.push_back("seeds must be >= 1");
    if (window < 1) out.push_back("window must be >= 1");
    if (!episodes && !budget_steps) out.push_back("one of episodes or budget_steps is required");
    if (episodes && *episodes == 0) out.push_back("episodes must be >= 1");
    if (budget_steps && *budget_steps == 0) out.push_back("budget_steps must be >= 1");
    if (name.empty() || name.find('/') != std::string::npos) out.push_back("name must be a non-empty plain name");
    for (auto& p : ppo.problems()) out.push_back("ppo: " + p);
    if (!(intrinsic.forward_weight >= 0 && intrinsic.forward_weight <= 1))
      out.push_back("intrinsic.forward_weight must be in [0, 1]");
    return out;
  }
};

namespace detail {

inline std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

inline std::size_t parse_count(const std::string& v) {
  const long long n = parse_integer(v);
  if (n < 0) throw std::invalid_argument("must be non-negative: '" + v + "'");
  return static_cast<std::size_t>(n);
}

inline std::vector<std::size_t> parse_sizes(const std::string& v) {
  std::vector<std::size_t> out;
  for (auto part : split(v, ','))
    if (auto t = trimmed(part); !t.empty()) out.push_back(parse_count(t));
  if (out.empty()) throw std::invalid_argument("empty size list");
  return out;
}

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace detail

// Flat `key = value` lines; `#` starts a comment. Unknown and repeated keys
// are errors, reported with line numbers.
inline ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig c;
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trimmed(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trimmed(std::string_view(t).substr(0, eq));
    const std::string value = detail::trimmed(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!entries.emplace(key, std::pair{value, line_no}).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }

  // paper_scale and agent shape the defaults for everything else.
  std::set<std::string> used;
  auto with = [&](const std::string& key, auto fn) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    used.insert(key);
    try {
      fn(it->second.first);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(it->second.second) + ": " + key + ": " + e.what());
    }
  };
  with("paper_scale", [&](const std::string& v) { c.paper_scale = detail::parse_bool(v); });
  if (c.paper_scale) c.dqn = DqnConfig::paper_scale();
  with("agent", [&](const std::string& v) { c.agent = agent_kind_from_string(v); });
  c.tabular.belief_augmented = c.agent == AgentKind::QBelief;
  if (c.agent == AgentKind::PpoRnd) c.intrinsic.kind = IntrinsicKind::Rnd;
  if (c.agent == AgentKind::PpoIcm) c.intrinsic.kind = IntrinsicKind::Icm;

  using detail::parse_count;
  with("name", [&](const std::string& v) { c.name = v; });
  with("map", [&](const std::string& v) { c.map = v; });
  with("seeds", [&](const std::string& v) { c.seeds = parse_count(v); });
  with("seed_base", [&](const std::string& v) { c.seed_base = parse_count(v); });
  with("episodes", [&](const std::string& v) { c.episodes = parse_count(v); });
  with("budget_steps", [&](const std::string& v) { c.budget_steps = parse_count(v); });
  with("window", [&](const std::string& v) { c.window = parse_count(v); });
  with("output_dir", [&](const std::string& v) { c.output_dir = v; });
  with("max_moves", [&](const std::string& v) { c.max_moves = static_cast<int>(parse_integer(v)); });
  with("fov", [&](const std::string& v) { c.fov = parse_double(v); });
  with("encoder", [&](const std::string& v) { c.encoder = encoder_mode_from_string(v); });

  with("q.alpha", [&](const std::string& v) { c.tabular.alpha = parse_double(v); });
  with("q.gamma", [&](const std::string& v) { c.tabular.gamma = parse_double(v); });
  with("q.epsilon_start", [&](const std::string& v) { c.tabular.epsilon_start = parse_double(v); });
  with("q.epsilon_end", [&](const std::string& v) { c.tabular.epsilon_end = parse_double(v); });
  with("q.epsilon_decay_fraction", [&](const std::string& v) { c.tabular.epsilon_decay_fraction = parse_double(v); });
  with("q.replay_sweeps", [&](const std::string& v) { c.tabular.replay_sweeps = parse_count(v); });
  with("q.initial_value", [&](const std::string& v) { c.tabular.initial_value = parse_double(v); });

  with("dqn.learning_rate", [&](const std::string& v) { c.dqn.learning_rate = parse_double(v); });
  with("dqn.batch_size", [&](const std::string& v) { c.dqn.batch_size = parse_count(v); });
  with("dqn.min_history", [&](const std::string& v) { c.dqn.min_history = parse_count(v); });
  with("dqn.replay_capacity", [&](const std::string& v) { c.dqn.replay_capacity = parse_count(v); });
  with("dqn.steps_per_phase", [&](const std::string& v) { c.dqn.steps_per_phase = parse_count(v); });
  with("dqn.update_period", [&](const std::string& v) { c.dqn.update_period = parse_count(v); });
  with("dqn.target_sync_interval", [&](const std::string& v) { c.dqn.target_sync_interval = parse_count(v); });
  with("dqn.gamma", [&](const std::string& v) { c.dqn.gamma = parse_double(v); });
  with("dqn.epsilon_start", [&](const std::string& v) { c.dqn.epsilon_start = parse_double(v); });
  with("dqn.epsilon_end", [&](const std::string& v) { c.dqn.epsilon_end = parse_double(v); });
  with("dqn.epsilon_decay_fraction", [&](const std::string& v) { c.dqn.epsilon_decay_fraction = parse_double(v); });
  with("dqn.hidden", [&](const std::string& v) { c.dqn.hidden = detail::parse_sizes(v); });

  with("ppo.learning_rate", [&](const std::string& v) { c.ppo.learning_rate = parse_double(v); });
  with("ppo.clip", [&](const std::string& v) { c.ppo.clip = parse_double(v); });
  with("ppo.value_coef", [&](const std::string& v) { c.ppo.value_coef = parse_double(v); });
  with("ppo.entropy_coef", [&](const std::string& v) { c.ppo.entropy_coef = parse_double(v); });
  with("ppo.parallel_envs", [&](const std::string& v) { c.ppo.parallel_envs = parse_count(v); });
  with("ppo.steps_per_env", [&](const std::string& v) { c.ppo.steps_per_env = parse_count(v); });
  with("ppo.minibatches", [&](const std::string& v) { c.ppo.minibatches = parse_count(v); });
  with("ppo.epochs", [&](const std::string& v) { c.ppo.epochs = parse_count(v); });
  with("ppo.gamma", [&](const std::string& v) { c.ppo.gamma = parse_double(v); });
  with("ppo.hidden", [&](const std::string& v) { c.ppo.hidden = detail::parse_sizes(v); });
  with("ppo.orthogonal_init", [&](const std::string& v) { c.ppo.orthogonal_init = detail::parse_bool(v); });
  with("ppo.hidden_gain", [&](const std::string& v) { c.ppo.hidden_gain = parse_double(v); });
  with("ppo.policy_gain", [&](const std::string& v) { c.ppo.policy_gain = parse_double(v); });
  with("ppo.value_gain", [&](const std::string& v) { c.ppo.value_gain = parse_double(v); });
  with("ppo.normalize_advantages", [&](const std::string& v) { c.ppo.normalize_advantages = detail::parse_bool(v); });

  with("intrinsic.beta", [&](const std::string& v) { c.intrinsic.beta = parse_double(v); });
  with("intrinsic.off_threshold", [&](const std::string& v) { c.intrinsic.off_threshold = parse_double(v); });
  with("intrinsic.learning_rate", [&](const std::string& v) { c.intrinsic.learning_rate = parse_double(v); });
  with("intrinsic.feature_size", [&](const std::string& v) { c.intrinsic.feature_size = parse_count(v); });
  with("intrinsic.hidden", [&](const std::string& v) { c.intrinsic.hidden = parse_count(v); });
  with("intrinsic.epochs", [&](const std::string& v) { c.intrinsic.epochs = parse_count(v); });
  with("intrinsic.minibatch", [&](const std::string& v) { c.intrinsic.minibatch = parse_count(v); });
  with("intrinsic.normalize", [&](const std::string& v) { c.intrinsic.normalize = detail::parse_bool(v); });
  with("intrinsic.forward_weight", [&](const std::string& v) { c.intrinsic.forward_weight = parse_double(v); });

  for (const auto& [key, entry] : entries)
    if (!used.count(key)) throw ConfigError("line " + std::to_string(entry.second) + ": unknown key '" + key + "'");
  if (const char* env = std::getenv("AMBIMAZE_OUT"); env && *env) c.output_dir = env;
  if (auto p = c.problems(); !p.empty()) throw ConfigError(p.front());
  return c;
}

// Every effective setting, one `key = value` per line in a fixed order;
// parses back to an equivalent config.
inline std::string resolved_config(const ExperimentConfig& c) {
  std::string out;
  auto put = [&](std::string_view k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  auto d = [](double v) { return format_double(v); };
  auto n = [](std::size_t v) { return std::to_string(v); };
  put("name", c.name);
  put("map", c.map);
  put("agent", std::string(agent_name(c.agent)));
  put("seeds", n(c.seeds));
  put("seed_base", std::to_string(c.seed_base));
  if (c.episodes) put("episodes", n(*c.episodes));
  if (c.budget_steps) put("budget_steps", n(*c.budget_steps));
  put("window", n(c.window));
  put("output_dir", c.output_dir);
  put("paper_scale", b(c.paper_scale));
  if (c.max_moves) put("max_moves", std::to_string(*c.max_moves));
  if (c.fov) put("fov", d(*c.fov));
  put("encoder", c.encoder == EncoderMode::Compact ? "compact" : "pixel21");
  if (c.agent == AgentKind::QBelief || c.agent == AgentKind::QBeliefFree) {
    put("q.alpha", d(c.tabular.alpha));
    put("q.gamma", d(c.tabular.gamma));
    put("q.epsilon_start", d(c.tabular.epsilon_start));
    put("q.epsilon_end", d(c.tabular.epsilon_end));
    put("q.epsilon_decay_fraction", d(c.tabular.epsilon_decay_fraction));
    put("q.replay_sweeps", n(c.tabular.replay_sweeps));
    put("q.initial_value", d(c.tabular.initial_value));
  }
  if (c.agent == AgentKind::Dqn) {
    put("dqn.learning_rate", d(c.dqn.learning_rate));
    put("dqn.batch_size", n(c.dqn.batch_size));
    put("dqn.min_history", n(c.dqn.min_history));
    put("dqn.replay_capacity", n(c.dqn.replay_capacity));
    put("dqn.steps_per_phase", n(c.dqn.steps_per_phase));
    put("dqn.update_period", n(c.dqn.update_period));
    put("dqn.target_sync_interval", n(c.dqn.target_sync_interval));
    put("dqn.gamma", d(c.dqn.gamma));
    put("dqn.epsilon_start", d(c.dqn.epsilon_start));
    put("dqn.epsilon_end", d(c.dqn.epsilon_end));
    put("dqn.epsilon_decay_fraction", d(c.dqn.epsilon_decay_fraction));
    put("dqn.hidden", detail::join_sizes(c.dqn.hidden));
  }
  if (is_ppo(c.agent)) {
    put("ppo.learning_rate", d(c.ppo.learning_rate));
    put("ppo.clip", d(c.ppo.clip));
    put("ppo.value_coef", d(c.ppo.value_coef));
    put("ppo.entropy_coef", d(c.ppo.entropy_coef));
    put("ppo.parallel_envs", n(c.ppo.parallel_envs));
    put("ppo.steps_per_env", n(c.ppo.steps_per_env));
    put("ppo.minibatches", n(c.ppo.minibatches));
    put("ppo.epochs", n(c.ppo.epochs));
    put("ppo.gamma", d(c.ppo.gamma));
    put("ppo.hidden", detail::join_sizes(c.ppo.hidden));
    put("ppo.orthogonal_init", b(c.ppo.orthogonal_init));
    put("ppo.hidden_gain", d(c.ppo.hidden_gain));
    put("ppo.policy_gain", d(c.ppo.policy_gain));
    put("ppo.value_gain", d(c.ppo.value_gain));
    put("ppo.normalize_advantages", b(c.ppo.normalize_advantages));
  }
  if (c.intrinsic.kind != IntrinsicKind::None) {
    put("intrinsic.beta", d(c.intrinsic.beta));
    put("intrinsic.off_threshold", d(c.intrinsic.off_threshold));
    put("intrinsic.learning_rate", d(c.intrinsic.learning_rate));
    put("intrinsic.feature_size", n(c.intrinsic.feature_size));
    put("intrinsic.hidden", n(c.intrinsic.hidden));
    put("intrinsic.epochs", n(c.intrinsic.epochs));
    put("intrinsic.minibatch", n(c.intrinsic.minibatch));
    put("intrinsic.normalize", b(c.intrinsic.normalize));
    put("intrinsic.forward_weight", d(c.intrinsic.forward_weight));
  }
  return out;
}

}  // namespace ambimaze
