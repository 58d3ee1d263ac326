#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/attention/insight.hpp"
#include "lucifer/attention/shaping.hpp"
#include "lucifer/env/grid_map.hpp"
#include "lucifer/env/gridworld.hpp"
#include "lucifer/learning/q_learning.hpp"
#include "lucifer/llm/backend.hpp"
#include "lucifer/llm/extractor.hpp"

namespace lucifer {

struct InsightSchedule {
  std::size_t episode = 0;
  std::size_t step = 0;

  bool due(std::size_t ep, std::size_t st) const { return ep > episode || (ep == episode && st >= step); }
};

/// Facilitator backend: either a generic backend or the built-in perfect
/// table derived from the map.
struct FacilitatorSpec {
  bool perfect = true;
  BackendSpec backend = ScriptedSpec{};
};

struct RunConfig {
  std::size_t episodes = 1000;
  std::size_t trials = 50;
  std::uint64_t seed_base = 0;

  std::string map_path;
  int info_setting = 3;
  RewardMode reward_mode = RewardMode::NonSparse;
  std::optional<std::size_t> step_cap;

  LearningParams learning;
  ShapingConfig shaping;

  /// Fixture insights, used directly.
  std::vector<ContextInsight> insights;
  /// Reports pushed through the extractor at trial start.
  std::vector<VerbalInput> reports;
  InsightSchedule insight_schedule;

  std::string kb_path;
  std::string prompt_dir;
  BackendSpec extractor = ScriptedSpec{};
  FacilitatorSpec facilitator;
  std::string memory_path;  // empty: the facilitator memory is not persisted

  RewardConfig rewards() const { return reward_mode == RewardMode::Sparse ? RewardConfig::sparse() : RewardConfig::non_sparse(); }

  void validate() const {
    if (episodes < 1 || trials < 1) throw ConfigError("episodes and trials must be at least 1");
    if (info_setting != 3 && info_setting != 6) throw ConfigError("info setting must be 3 or 6");
    if (map_path.empty()) throw ConfigError("env.map is required");
    learning.validate();
    shaping.validate();
  }

  std::string setting_name() const {
    return std::to_string(info_setting) + "-info " + (reward_mode == RewardMode::Sparse ? "sparse" : "non-sparse");
  }
};

namespace detail {
inline std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}
}  // namespace detail

inline ReferenceMode parse_reference_mode(const std::string& s) {
  if (s == "avoid" || s == "avoid_undesirable") return ReferenceMode::AvoidUndesirable;
  if (s == "seek" || s == "seek_desirable") return ReferenceMode::SeekDesirable;
  throw ConfigError("unknown reference mode " + s);
}

inline ActionMode parse_action_mode(const std::string& s) {
  if (s == "prune") return ActionMode::Prune;
  if (s == "restrict" || s == "restrict_to_preferred") return ActionMode::RestrictToPreferred;
  if (s == "expand") return ActionMode::Expand;
  if (s == "unchanged") return ActionMode::Unchanged;
  throw ConfigError("unknown action mode " + s);
}

inline std::vector<ContextInsight> insights_from_json(const nlohmann::json& j) {
  std::vector<ContextInsight> out;
  for (const auto& e : j) out.push_back(insight_from_json(e));
  return out;
}

/// Parses a run config; relative paths resolve against `base_dir`.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = "") {
  RunConfig c;
  try {
    c.episodes = j.value("episodes", c.episodes);
    c.trials = j.value("trials", c.trials);
    c.seed_base = j.value("seed_base", c.seed_base);

    const auto env = j.value("env", nlohmann::json::object());
    c.map_path = detail::resolve(base_dir, env.value("map", std::string()));
    c.info_setting = env.value("info", c.info_setting);
    const auto reward = env.value("reward", std::string("non-sparse"));
    if (reward == "sparse") c.reward_mode = RewardMode::Sparse;
    else if (reward == "non-sparse") c.reward_mode = RewardMode::NonSparse;
    else throw ConfigError("env.reward must be sparse or non-sparse");
    if (env.contains("step_cap")) c.step_cap = env["step_cap"].get<std::size_t>();

    const auto l = j.value("learning", nlohmann::json::object());
    c.learning.alpha = l.value("alpha", c.learning.alpha);
    c.learning.gamma = l.value("gamma", c.learning.gamma);
    c.learning.epsilon_start = l.value("epsilon_start", c.learning.epsilon_start);
    c.learning.epsilon_decay = l.value("epsilon_decay", c.learning.epsilon_decay);
    c.learning.epsilon_min = l.value("epsilon_min", c.learning.epsilon_min);

    const auto s = j.value("shaping", nlohmann::json::object());
    c.shaping.lambda_u = s.value("lambda_u", c.shaping.lambda_u);
    c.shaping.lambda_d = s.value("lambda_d", c.shaping.lambda_d);
    c.shaping.lambda_o = s.value("lambda_o", c.shaping.lambda_o);
    c.shaping.beta_u = s.value("beta_u", c.shaping.beta_u);
    c.shaping.beta_d = s.value("beta_d", c.shaping.beta_d);
    c.shaping.beta_o = s.value("beta_o", c.shaping.beta_o);
    c.shaping.potential_scale = s.value("potential_scale", c.shaping.potential_scale);
    if (s.contains("reference")) c.shaping.reference_mode = parse_reference_mode(s["reference"].get<std::string>());
    if (s.contains("action_mode")) c.shaping.action_mode = parse_action_mode(s["action_mode"].get<std::string>());

    if (j.contains("insights")) {
      const auto& ins = j["insights"];
      if (ins.is_string()) c.insights = insights_from_json(read_json_file(detail::resolve(base_dir, ins.get<std::string>())));
      else c.insights = insights_from_json(ins);
    }
    for (const auto& r : j.value("reports", nlohmann::json::array()))
      c.reports.push_back({r.value("id", std::string()), r.at("text").get<std::string>(), Complexity::Simple});
    if (j.contains("insight_schedule")) {
      c.insight_schedule.episode = j["insight_schedule"].value("episode", std::size_t{0});
      c.insight_schedule.step = j["insight_schedule"].value("step", std::size_t{0});
    }

    c.kb_path = detail::resolve(base_dir, j.value("kb", std::string()));
    c.prompt_dir = detail::resolve(base_dir, j.value("prompts", std::string()));
    c.memory_path = detail::resolve(base_dir, j.value("memory_path", std::string()));
    const auto b = j.value("backends", nlohmann::json::object());
    if (b.contains("extractor")) c.extractor = backend_spec_from_json(b["extractor"], base_dir);
    if (b.contains("facilitator")) {
      const auto& f = b["facilitator"];
      if (f.value("kind", std::string()) == "perfect") {
        c.facilitator.perfect = true;
      } else {
        c.facilitator.perfect = false;
        c.facilitator.backend = backend_spec_from_json(f, base_dir);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return run_config_from_json(read_json_file(path), dir);
}

}  // namespace lucifer
