#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lucifer/eval/agent.hpp"
#include "lucifer/eval/config.hpp"
#include "lucifer/eval/metrics.hpp"
#include "lucifer/hierarchy/episode.hpp"
#include "lucifer/llm/extractor.hpp"
#include "lucifer/llm/knowledge_base.hpp"

namespace lucifer {

/// Everything a trial needs that is read from disk once.
struct TrialFixtures {
  GridMap map;
  KnowledgeBase kb;
  std::optional<PromptTemplate> extractor_prompt;
  std::optional<PromptTemplate> facilitator_prompt;

  static TrialFixtures load(const RunConfig& cfg) {
    TrialFixtures f;
    f.map = load_map_file(cfg.map_path);
    if (f.map.info_requirement() != cfg.info_setting)
      throw ConfigError("map info_requirement " + std::to_string(f.map.info_requirement()) +
                        " does not match the configured info setting " + std::to_string(cfg.info_setting));
    if (!cfg.kb_path.empty()) {
      f.kb = kb_from_json(read_json_file(cfg.kb_path));
      f.kb.validate(f.map);
    }
    if (!cfg.prompt_dir.empty()) {
      f.extractor_prompt = PromptTemplate::load(cfg.prompt_dir + "/extractor_v1.txt");
      f.facilitator_prompt = PromptTemplate::load(cfg.prompt_dir + "/facilitator_v1.txt");
    }
    return f;
  }
};

struct TrialResult {
  std::vector<EpisodeSummary> episodes;
  TrialMetrics metrics;
  std::vector<ContextInsight> insights;
  std::size_t facilitator_queries = 0;
  std::size_t facilitator_fallbacks = 0;
};

/// Insights for a trial: fixture insights plus whatever the extractor finds
/// in the configured reports.
inline std::vector<ContextInsight> gather_insights(const RunConfig& cfg, const TrialFixtures& fx) {
  std::vector<ContextInsight> out = cfg.insights;
  if (cfg.reports.empty()) return out;
  if (!fx.extractor_prompt) throw ConfigError("reports need a prompt directory");
  InformationSpace ispace = InformationSpace::sar(cfg.info_setting);
  auto backend = make_backend(cfg.extractor);
  for (const auto& r : cfg.reports) {
    auto res = extract_context(r, fx.kb, ispace, *backend, *fx.extractor_prompt);
    out.insert(out.end(), res.insights.begin(), res.insights.end());
  }
  return out;
}

/// Runs cfg.episodes episodes of one variant with seed cfg.seed_base + trial.
inline TrialResult run_trial(const RunConfig& cfg, const AgentVariant& variant, std::size_t trial,
                             const TrialFixtures& fx, LogSink* sink = nullptr) {
  cfg.validate();
  const GridMap& map = fx.map;
  const InformationSpace ispace = InformationSpace::sar(cfg.info_setting);
  const RewardConfig rewards = cfg.rewards();
  const SdeSchedule schedule;
  const StateIndexer indexer(map);
  AgentTables tables = AgentTables::make(indexer, variant.hierarchical);
  Rng rng = make_rng(cfg.seed_base + trial, kExplorationStream);
  Rng fac_rng = make_rng(cfg.seed_base + trial, kFacilitatorStream);

  std::unique_ptr<Backend> fac_backend;
  std::unique_ptr<Facilitator> facilitator;
  if (variant.facilitator) {
    if (!fx.facilitator_prompt) throw ConfigError("facilitator variants need a prompt directory");
    fac_backend = cfg.facilitator.perfect
                      ? std::make_unique<ScriptedBackend>(perfect_facilitator_table(map))
                      : make_backend(cfg.facilitator.backend);
    facilitator = std::make_unique<Facilitator>(*fac_backend, *fx.facilitator_prompt, fac_rng, cfg.memory_path);
  }

  AgentHooks hooks(map, indexer, variant, cfg.shaping, cfg.learning.gamma, facilitator.get());
  TrialResult result;
  result.insights = gather_insights(cfg, fx);
  if (!result.insights.empty()) hooks.schedule({result.insights, cfg.insight_schedule, "fixture"});

  EpisodeContext ctx{map, rewards, ispace, schedule, cfg.learning, indexer, tables, hooks, rng, sink};
  const std::size_t cap = cfg.step_cap.value_or(default_step_cap(map));
  result.episodes.reserve(cfg.episodes);
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    EpisodeRunner runner(ctx, ep, {cap, decay_epsilon(cfg.learning, ep), true});
    while (!runner.done()) runner.step();
    result.episodes.push_back(runner.summary());
  }
  result.metrics = compute_metrics(result.episodes, variant.facilitator);
  if (facilitator) {
    result.facilitator_queries = facilitator->queries();
    result.facilitator_fallbacks = facilitator->fallbacks();
  }
  return result;
}

inline TrialResult run_trial(const RunConfig& cfg, const AgentVariant& variant, std::size_t trial,
                             LogSink* sink = nullptr) {
  return run_trial(cfg, variant, trial, TrialFixtures::load(cfg), sink);
}

/// All trials of one variant, aggregated. Trials are independent and run on
/// up to `threads` workers (0: hardware concurrency); a persisted facilitator
/// memory forces sequential execution since trials would share the file.
inline MetricsReport run_variant(const RunConfig& cfg, const AgentVariant& variant, const TrialFixtures& fx,
                                 std::vector<TrialMetrics>* per_trial = nullptr, std::size_t threads = 0) {
  std::vector<TrialMetrics> trials(cfg.trials);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (!cfg.memory_path.empty() && variant.facilitator) threads = 1;
  threads = std::min(threads, cfg.trials);
  if (threads <= 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) trials[t] = run_trial(cfg, variant, t, fx).metrics;
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t t; (t = next++) < cfg.trials;) {
          try {
            trials[t] = run_trial(cfg, variant, t, fx).metrics;
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  auto report = aggregate(variant.name(), cfg.setting_name(), trials);
  if (per_trial) *per_trial = std::move(trials);
  return report;
}

}  // namespace lucifer
