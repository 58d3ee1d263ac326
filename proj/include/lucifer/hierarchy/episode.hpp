#pragma once

// Episode execution for both agent families. Hierarchical agents follow the
// SDE's assignments and dispatch the owning worker until its termination
// predicate fires; flat agents act over the full alphabet with one table.
// Attention-space shaping and the exploration facilitator plug in through
// EpisodeHooks at step boundaries.

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/attention/shaping.hpp"
#include "lucifer/hierarchy/state_index.hpp"
#include "lucifer/hierarchy/tasks.hpp"
#include "lucifer/learning/q_learning.hpp"

namespace lucifer {

using Rng = std::mt19937_64;

/// Independent generator per purpose, derived from the trial seed.
inline Rng make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

inline constexpr std::uint32_t kExplorationStream = 0;
inline constexpr std::uint32_t kFacilitatorStream = 1;

/// One Q table per worker (hierarchical) or a single flat table.
struct AgentTables {
  bool hierarchical = true;
  QTable flat;
  QTable navigate;
  QTable collect;
  QTable triage;

  static AgentTables make(const StateIndexer& idx, bool hierarchical) {
    AgentTables t;
    t.hierarchical = hierarchical;
    if (hierarchical) {
      t.navigate = QTable(idx.navigate_states(), nav_actions());
      t.collect = QTable(idx.collect_states(), collect_actions());
      t.triage = QTable(idx.triage_states(), triage_actions());
    } else {
      t.flat = QTable(idx.flat_states(), ActionSet::all());
    }
    return t;
  }

  QTable& table(Worker w) {
    switch (w) {
      case Worker::Navigate: return navigate;
      case Worker::CollectInfo: return collect;
      case Worker::Triage: return triage;
      case Worker::Flat: return flat;
    }
    return flat;
  }
  const QTable& table(Worker w) const { return const_cast<AgentTables*>(this)->table(w); }
  friend bool operator==(const AgentTables&, const AgentTables&) = default;
};

struct StepRecord {
  std::size_t episode = 0;
  std::size_t step = 0;
  Worker worker = Worker::Flat;
  std::optional<TaskAssignment> assignment;
  EnvState state;
  std::size_t action = 0;
  SelectionSource source = SelectionSource::Greedy;
  double reward = 0.0;
  std::optional<double> shaped_reward;
  EventSet events;
  std::optional<ActionMask> adjusted_mask;
  bool fail_open = false;
  EnvState next_state;
};

struct EpisodeSummary {
  std::size_t episode = 0;
  std::size_t steps = 0;
  bool mission_complete = false;
  bool fully_collected = false;
  bool truncated = false;
  std::size_t hazard_hits = 0;
  double total_reward = 0.0;
  // Collection attempts at a point where some Collect could succeed, split by
  // who chose the action during exploration.
  std::size_t random_collect_attempts = 0;
  std::size_t random_collect_correct = 0;
  std::size_t facilitator_collect_attempts = 0;
  std::size_t facilitator_collect_correct = 0;
};

inline nlohmann::json state_json(const EnvState& s) {
  return {{"pos", {s.position.row, s.position.col}},
          {"collected", static_cast<std::uint32_t>(s.collected.to_ulong())},
          {"rescued", s.rescued}};
}

inline nlohmann::json to_json(const StepRecord& r) {
  nlohmann::json j{{"type", "step"},
                   {"episode", r.episode},
                   {"step", r.step},
                   {"task", worker_name(r.worker)},
                   {"state", state_json(r.state)},
                   {"action", r.action},
                   {"source", source_name(r.source)},
                   {"reward", r.reward},
                   {"events", r.events.names()}};
  if (r.assignment) j["target"] = {r.assignment->target.row, r.assignment->target.col};
  if (r.shaped_reward) j["shaped_reward"] = *r.shaped_reward;
  if (r.adjusted_mask) j["mask"] = r.adjusted_mask->indices();
  if (r.fail_open) j["warning"] = "mask_fail_open";
  return j;
}

inline nlohmann::json to_json(const EpisodeSummary& s) {
  return {{"type", "episode_end"},
          {"episode", s.episode},
          {"steps", s.steps},
          {"mission_complete", s.mission_complete},
          {"fully_collected", s.fully_collected},
          {"truncated", s.truncated},
          {"hazard_hits", s.hazard_hits},
          {"return", s.total_reward},
          {"random_collect", {s.random_collect_attempts, s.random_collect_correct}},
          {"facilitator_collect", {s.facilitator_collect_attempts, s.facilitator_collect_correct}}};
}

/// Receives the per-step stream of an episode.
class LogSink {
 public:
  virtual ~LogSink() = default;
  virtual void on_step(const StepRecord&) {}
  virtual void on_overlay(std::size_t /*episode*/, std::size_t /*step*/, const std::string& /*state_key*/,
                          const OverlayEntry&) {}
  virtual void on_episode_end(const EpisodeSummary&) {}
};

/// JSON-lines writer: one record per step, overlay diff and episode end.
class JsonLinesSink : public LogSink {
 public:
  explicit JsonLinesSink(std::ostream& os) : os_(os) {}
  void on_step(const StepRecord& r) override { os_ << to_json(r).dump() << '\n'; }
  void on_overlay(std::size_t episode, std::size_t step, const std::string& key, const OverlayEntry& e) override {
    nlohmann::json j{{"type", "overlay"}, {"episode", episode}, {"step", step}, {"state_key", key},
                     {"action", e.action},  {"old", e.old_value},  {"new", e.new_value}};
    os_ << j.dump() << '\n';
  }
  void on_episode_end(const EpisodeSummary& s) override { os_ << to_json(s).dump() << '\n'; }

 private:
  std::ostream& os_;
};

/// Keeps everything in memory; used by run_hierarchical_episode and tests.
class MemorySink : public LogSink {
 public:
  struct Overlay {
    std::size_t episode, step;
    std::string key;
    OverlayEntry entry;
  };
  std::vector<StepRecord> steps;
  std::vector<Overlay> overlays;
  std::vector<EpisodeSummary> episodes;

  void on_step(const StepRecord& r) override { steps.push_back(r); }
  void on_overlay(std::size_t e, std::size_t s, const std::string& k, const OverlayEntry& o) override {
    overlays.push_back({e, s, k, o});
  }
  void on_episode_end(const EpisodeSummary& s) override { episodes.push_back(s); }
};

/// Extension points applied at step boundaries. Defaults are no-ops.
class EpisodeHooks {
 public:
  virtual ~EpisodeHooks() = default;
  virtual void on_episode_start(std::size_t /*episode*/) {}
  /// Called before each action selection; insight arrival happens here.
  virtual void at_step_boundary(std::size_t /*episode*/, std::size_t /*step*/, AgentTables&, LogSink*) {}
  virtual MaskAdjustment adjust_mask(Worker, const EnvState&, const ActionMask& base) { return {base, false}; }
  /// Reward used for learning; nullopt keeps the environment reward.
  virtual std::optional<double> shape_reward(Worker, double, const EnvState&, const EnvState&, bool) {
    return std::nullopt;
  }
  virtual const ExplorationHook* explorer(Worker, const EnvState&) { return nullptr; }
  /// Forces an action (scripted workers in tests); nullopt defers to the learner.
  virtual std::optional<std::size_t> override_action(Worker, const EnvState&, const TaskAssignment*) {
    return std::nullopt;
  }
  virtual void on_transition(Worker, const EnvState&, std::size_t, const StepOutcome&, SelectionSource) {}
  virtual void on_episode_end(const EpisodeSummary&) {}
};

struct EpisodeContext {
  const GridMap& map;
  const RewardConfig& rewards;
  const InformationSpace& ispace;
  const SdeSchedule& schedule;
  const LearningParams& params;
  const StateIndexer& indexer;
  AgentTables& tables;
  EpisodeHooks& hooks;
  Rng& rng;
  LogSink* sink = nullptr;
};

struct EpisodeOptions {
  std::size_t step_cap = 400;
  double epsilon = 0.0;
  bool learn = true;
};

inline std::size_t default_step_cap(const GridMap& map) { return map.info_requirement() <= 3 ? 400 : 800; }

class EpisodeRunner {
 public:
  EpisodeRunner(EpisodeContext ctx, std::size_t episode, EpisodeOptions opts)
      : ctx_(ctx), opts_(opts), state_(reset(ctx.map)) {
    summary_.episode = episode;
    ctx_.hooks.on_episode_start(episode);
  }

  bool done() const { return done_; }
  const EnvState& state() const { return state_; }
  const std::optional<TaskAssignment>& assignment() const { return current_; }
  const EpisodeSummary& summary() const { return summary_; }

  /// Worker and mask that would act next (for snapshots). Advances the SDE
  /// past satisfied assignments but takes no environment step.
  std::pair<Worker, ActionMask> peek() {
    if (!ctx_.tables.hierarchical) return {Worker::Flat, ctx_.hooks.adjust_mask(Worker::Flat, state_, flat_base_actions()).mask};
    if (!ensure_assignment()) return {Worker::Triage, ActionMask{}};
    const Worker w = worker_for(current_->task);
    return {w, ctx_.hooks.adjust_mask(w, state_, task_actions(current_->task)).mask};
  }

  /// Executes one environment step. No-op once done.
  void step() {
    if (done_) return;
    ctx_.hooks.at_step_boundary(summary_.episode, summary_.steps, ctx_.tables, ctx_.sink);

    Worker w = Worker::Flat;
    std::size_t target_index = 0;
    ActionMask base = flat_base_actions();
    if (ctx_.tables.hierarchical) {
      if (!ensure_assignment()) return;
      w = worker_for(current_->task);
      target_index = current_->target_index;
      base = task_actions(current_->task);
    }

    const auto adj = ctx_.hooks.adjust_mask(w, state_, base);
    QTable& q = ctx_.tables.table(w);
    const std::size_t s_idx = ctx_.indexer.index(w, state_, target_index);

    Selection sel;
    const TaskAssignment* asg = current_ ? &*current_ : nullptr;
    if (auto forced = ctx_.hooks.override_action(w, state_, asg)) {
      sel = {*forced, SelectionSource::Greedy};
    } else {
      sel = select_action(q, s_idx, adj.mask, opts_.epsilon, ctx_.rng, ctx_.hooks.explorer(w, state_));
    }

    const bool collectable = at_collectable_point(state_, ctx_.map);
    const StepOutcome out = lucifer::step(state_, sel.action, ctx_.map, ctx_.rewards);
    ++summary_.steps;

    const bool worker_done = out.terminated || (current_ && check_termination(*current_, out.next_state));
    const auto shaped = ctx_.hooks.shape_reward(w, out.reward, state_, out.next_state, worker_done);
    const double learn_reward = shaped.value_or(out.reward);

    if (opts_.learn) {
      if (worker_done) {
        td_update(q, s_idx, sel.action, learn_reward, std::nullopt, base, ctx_.params);
      } else {
        const auto next_idx = ctx_.indexer.index(w, out.next_state, target_index);
        const auto next_mask = ctx_.hooks.adjust_mask(w, out.next_state, base).mask;
        td_update(q, s_idx, sel.action, learn_reward, next_idx, next_mask, ctx_.params);
      }
    }

    if (is_collect(sel.action) && collectable && sel.source != SelectionSource::Greedy) {
      const bool ok = out.events.has(Event::CorrectCollect);
      if (sel.source == SelectionSource::Facilitator) {
        ++summary_.facilitator_collect_attempts;
        summary_.facilitator_collect_correct += ok;
      } else {
        ++summary_.random_collect_attempts;
        summary_.random_collect_correct += ok;
      }
    }
    if (out.events.has(Event::HazardHit)) ++summary_.hazard_hits;
    summary_.total_reward += out.reward;
    if (out.next_state.collected_count() >= ctx_.ispace.required_count) summary_.fully_collected = true;

    if (ctx_.sink) {
      StepRecord rec;
      rec.episode = summary_.episode;
      rec.step = summary_.steps - 1;
      rec.worker = w;
      rec.assignment = current_;
      rec.state = state_;
      rec.action = sel.action;
      rec.source = sel.source;
      rec.reward = out.reward;
      rec.shaped_reward = shaped;
      rec.events = out.events;
      if (adj.mask != base) rec.adjusted_mask = adj.mask;
      rec.fail_open = adj.fail_open;
      rec.next_state = out.next_state;
      ctx_.sink->on_step(rec);
    }
    ctx_.hooks.on_transition(w, state_, sel.action, out, sel.source);

    state_ = out.next_state;
    if (worker_done && current_) current_.reset();
    if (out.events.has(Event::MissionComplete)) summary_.mission_complete = true;
    if (out.terminated) {
      finish();
    } else if (summary_.steps >= opts_.step_cap) {
      summary_.truncated = true;
      finish();
    }
  }

 private:
  bool ensure_assignment() {
    while (true) {
      if (!current_) {
        auto next = next_assignment(state_, ctx_.map, ctx_.ispace, ctx_.schedule);
        if (std::holds_alternative<MissionDone>(next)) {
          finish();
          return false;
        }
        current_ = std::get<TaskAssignment>(next);
      }
      if (!check_termination(*current_, state_)) return true;
      current_.reset();
    }
  }

  void finish() {
    if (done_) return;
    done_ = true;
    if (ctx_.sink) ctx_.sink->on_episode_end(summary_);
    ctx_.hooks.on_episode_end(summary_);
  }

  EpisodeContext ctx_;
  EpisodeOptions opts_;
  EnvState state_;
  std::optional<TaskAssignment> current_;
  EpisodeSummary summary_;
  bool done_ = false;
};

struct EpisodeLog {
  std::vector<StepRecord> steps;
  std::vector<MemorySink::Overlay> overlays;
  EpisodeSummary summary;
};

/// Runs one full episode to MissionComplete or the step cap.
inline EpisodeLog run_hierarchical_episode(EpisodeContext ctx, std::size_t episode, EpisodeOptions opts) {
  MemorySink mem;
  LogSink* outer = ctx.sink;
  struct Tee : LogSink {
    MemorySink& a;
    LogSink* b;
    Tee(MemorySink& m, LogSink* o) : a(m), b(o) {}
    void on_step(const StepRecord& r) override { a.on_step(r); if (b) b->on_step(r); }
    void on_overlay(std::size_t e, std::size_t s, const std::string& k, const OverlayEntry& o) override {
      a.on_overlay(e, s, k, o);
      if (b) b->on_overlay(e, s, k, o);
    }
    void on_episode_end(const EpisodeSummary& s) override { a.on_episode_end(s); if (b) b->on_episode_end(s); }
  } tee(mem, outer);
  ctx.sink = &tee;
  EpisodeRunner runner(ctx, episode, opts);
  while (!runner.done()) runner.step();
  return {std::move(mem.steps), std::move(mem.overlays), runner.summary()};
}

}  // namespace lucifer
