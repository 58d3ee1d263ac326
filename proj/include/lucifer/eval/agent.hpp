#pragma once

// Wires a zoo variant onto the episode loop: which tables exist, which
// shaping mechanism consumes the insights, and whether the CollectInfo worker
// explores through the facilitator.

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lucifer/attention/insight.hpp"
#include "lucifer/attention/shaping.hpp"
#include "lucifer/eval/config.hpp"
#include "lucifer/eval/variant.hpp"
#include "lucifer/hierarchy/episode.hpp"
#include "lucifer/llm/facilitator.hpp"

namespace lucifer {

struct InsightBatch {
  std::vector<ContextInsight> insights;
  InsightSchedule when;
  std::string correlation_id;
};

/// What happened when a batch took effect.
struct ShapingApplied {
  std::string correlation_id;
  std::size_t episode = 0;
  std::size_t step = 0;
  std::vector<ContextInsight> insights;
  CriticalStateSets critical;
  PolicyOverlay overlay;  // changed entries only
};

/// Exploration delegate for the CollectInfo worker.
class Facilitator {
 public:
  Facilitator(Backend& backend, PromptTemplate tmpl, Rng& rng, std::string memory_path = {})
      : backend_(backend), tmpl_(std::move(tmpl)), rng_(rng), memory_path_(std::move(memory_path)) {
    if (!memory_path_.empty()) memory_ = MemoryBuffer::load(memory_path_);
  }

  std::optional<std::size_t> propose(const EnvState& s, const ActionMask& allowed) {
    auto p = predict_action(s, trajectory_, memory_, allowed, backend_, tmpl_, rng_);
    ++queries_;
    if (p.event != FacilitatorEvent::None) {
      ++fallbacks_;
      return std::nullopt;
    }
    return p.action;
  }

  void episode_start() { trajectory_.clear(); }
  void observe(const EnvState& s, std::size_t a, const StepOutcome& out) {
    trajectory_.push({s, a, out.next_state, out.reward});
    if (is_collect(a)) memory_.record_outcome(s.position, a, out.events.has(Event::CorrectCollect));
  }
  void episode_end() {
    if (!memory_path_.empty()) memory_.save(memory_path_);
  }

  const TrajectoryBuffer& trajectory() const { return trajectory_; }
  const MemoryBuffer& memory() const { return memory_; }
  std::size_t queries() const { return queries_; }
  std::size_t fallbacks() const { return fallbacks_; }

 private:
  Backend& backend_;
  PromptTemplate tmpl_;
  Rng& rng_;
  std::string memory_path_;
  TrajectoryBuffer trajectory_;
  MemoryBuffer memory_;
  std::size_t queries_ = 0;
  std::size_t fallbacks_ = 0;
};

class AgentHooks : public EpisodeHooks {
 public:
  AgentHooks(const GridMap& map, const StateIndexer& indexer, AgentVariant variant, ShapingConfig shaping,
             double gamma, Facilitator* facilitator = nullptr)
      : map_(map), indexer_(indexer), variant_(variant), shaping_(shaping), gamma_(gamma),
        facilitator_(facilitator) {
    explore_ = [this](const ActionMask& m) { return facilitator_->propose(explore_state_, m); };
  }

  /// Queues insights; they take effect at the first step boundary at or after `batch.when`.
  void schedule(InsightBatch batch) { pending_.push_back(std::move(batch)); }
  bool has_pending() const { return !pending_.empty(); }
  void set_listener(std::function<void(const ShapingApplied&)> fn) { listener_ = std::move(fn); }

  const CriticalStateSets& critical() const { return critical_; }
  const AgentVariant& variant() const { return variant_; }

  void on_episode_start(std::size_t episode) override {
    episode_ = episode;
    if (facilitator_) facilitator_->episode_start();
  }

  void at_step_boundary(std::size_t episode, std::size_t step, AgentTables& tables, LogSink* sink) override {
    while (!pending_.empty() && pending_.front().when.due(episode, step)) {
      InsightBatch batch = std::move(pending_.front());
      pending_.pop_front();
      apply(batch, episode, step, tables, sink);
    }
  }

  MaskAdjustment adjust_mask(Worker w, const EnvState& s, const ActionMask& base) override {
    if (variant_.shaping != ShapingKind::ActionSpace || critical_.empty() || !moves(w)) return {base, false};
    return adjust_action_space(base, s.position, critical_, shaping_, map_);
  }

  std::optional<double> shape_reward(Worker w, double r, const EnvState& s, const EnvState& next,
                                     bool worker_terminal) override {
    if (variant_.shaping != ShapingKind::Reward || !shaper_ || !moves(w)) return std::nullopt;
    return (*shaper_)(r, s.position, next.position, worker_terminal);
  }

  const ExplorationHook* explorer(Worker w, const EnvState& s) override {
    if (!facilitator_ || !variant_.facilitator || w != Worker::CollectInfo) return nullptr;
    explore_state_ = s;
    return &explore_;
  }

  void on_transition(Worker, const EnvState& s, std::size_t a, const StepOutcome& out, SelectionSource) override {
    if (facilitator_ && variant_.facilitator) facilitator_->observe(s, a, out);
  }

  void on_episode_end(const EpisodeSummary&) override {
    if (facilitator_ && variant_.facilitator) facilitator_->episode_end();
  }

 private:
  static bool moves(Worker w) { return w == Worker::Navigate || w == Worker::Flat; }

  void apply(const InsightBatch& batch, std::size_t episode, std::size_t step, AgentTables& tables, LogSink* sink) {
    all_insights_.insert(all_insights_.end(), batch.insights.begin(), batch.insights.end());
    critical_ = derive_critical_sets(all_insights_, map_);

    ShapingApplied applied{batch.correlation_id, episode, step, batch.insights, critical_, {}};
    switch (variant_.shaping) {
      case ShapingKind::Policy: applied.overlay = shape_policy(tables, episode, step, sink); break;
      case ShapingKind::Reward: shaper_.emplace(map_, critical_, shaping_, gamma_); break;
      case ShapingKind::ActionSpace:
      case ShapingKind::None: break;
    }
    if (listener_) listener_(applied);
  }

  PolicyOverlay shape_policy(AgentTables& tables, std::size_t episode, std::size_t step, LogSink* sink) {
    const Worker w = tables.hierarchical ? Worker::Navigate : Worker::Flat;
    QTable& q = tables.table(w);
    std::vector<NavStateRef> rows;
    rows.reserve(q.state_count());
    const auto& points = map_.collection_points();
    for (std::size_t s = 0; s < q.state_count(); ++s) {
      const Coord pos = indexer_.position_of(w, s);
      if (!map_.passable(pos)) continue;
      std::optional<Coord> goal;
      if (w == Worker::Navigate) {
        const auto t = indexer_.target_of_navigate(s);
        goal = t < points.size() ? points[t] : map_.victim();
      }
      rows.push_back({s, pos, goal});
    }
    PolicyOverlay changed;
    for (const auto& e : apply_policy_shaping(q, rows, critical_, shaping_, map_)) {
      if (e.old_value == e.new_value) continue;
      changed.push_back(e);
      if (sink) sink->on_overlay(episode, step, indexer_.key(w, e.state), e);
    }
    return changed;
  }

  const GridMap& map_;
  const StateIndexer& indexer_;
  AgentVariant variant_;
  ShapingConfig shaping_;
  double gamma_;
  Facilitator* facilitator_;

  std::deque<InsightBatch> pending_;
  std::vector<ContextInsight> all_insights_;
  CriticalStateSets critical_;
  std::optional<RewardShaper> shaper_;
  std::function<void(const ShapingApplied&)> listener_;

  std::size_t episode_ = 0;
  EnvState explore_state_;
  ExplorationHook explore_;
};

}  // namespace lucifer
