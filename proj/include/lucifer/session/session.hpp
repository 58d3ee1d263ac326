#pragma once

// One interactive episode loop steered by verbal reports. Transport-agnostic:
// inbound JSON goes through receive(), outbound messages leave through the
// outbox callback in the order they were produced, and the owner drives
// tick() from a single thread.

#include <chrono>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/eval/agent.hpp"
#include "lucifer/eval/trial.hpp"
#include "lucifer/eval/variant.hpp"
#include "lucifer/llm/extractor.hpp"

namespace lucifer {

enum class MessageKind { Snapshot, InsightEvent, ShapingDiff, ReportSubmission, Control, MetricsTick, Error };

inline const char* message_kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::Snapshot: return "Snapshot";
    case MessageKind::InsightEvent: return "InsightEvent";
    case MessageKind::ShapingDiff: return "ShapingDiff";
    case MessageKind::ReportSubmission: return "ReportSubmission";
    case MessageKind::Control: return "Control";
    case MessageKind::MetricsTick: return "MetricsTick";
    case MessageKind::Error: return "Error";
  }
  return "Error";
}

inline std::optional<MessageKind> parse_message_kind(std::string_view s) {
  for (auto k : {MessageKind::Snapshot, MessageKind::InsightEvent, MessageKind::ShapingDiff,
                 MessageKind::ReportSubmission, MessageKind::Control, MessageKind::MetricsTick, MessageKind::Error})
    if (s == message_kind_name(k)) return k;
  return std::nullopt;
}

struct SessionMessage {
  MessageKind kind = MessageKind::Snapshot;
  nlohmann::json payload = nlohmann::json::object();
  std::uint64_t seq = 0;
};

inline nlohmann::json to_json(const SessionMessage& m) {
  return {{"kind", message_kind_name(m.kind)}, {"seq", m.seq}, {"payload", m.payload}};
}

enum class Phase { Idle, Running, Paused, Finished };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Running: return "Running";
    case Phase::Paused: return "Paused";
    case Phase::Finished: return "Finished";
  }
  return "Idle";
}

enum class ControlAction { Start, Pause, Resume, Step, Speed, Reset, QTable };

inline std::optional<ControlAction> parse_control_action(std::string_view s) {
  if (s == "start") return ControlAction::Start;
  if (s == "pause") return ControlAction::Pause;
  if (s == "resume") return ControlAction::Resume;
  if (s == "step") return ControlAction::Step;
  if (s == "speed") return ControlAction::Speed;
  if (s == "reset") return ControlAction::Reset;
  if (s == "qtable") return ControlAction::QTable;
  return std::nullopt;
}

struct ReportSubmission {
  std::string correlation_id;
  std::string text;
};

struct ControlCommand {
  ControlAction action = ControlAction::Pause;
  double speed = 0.0;
};

using Inbound = std::variant<ReportSubmission, ControlCommand>;

/// Validates one client frame. Throws ValidationError with a client-facing
/// message; the correlation id, when present, is returned through `cid`.
inline Inbound parse_inbound(const nlohmann::json& j, std::string& cid) {
  if (!j.is_object()) throw ValidationError("message must be a JSON object");
  if (auto it = j.find("payload"); it != j.end() && it->is_object())
    if (auto c = it->find("correlation_id"); c != it->end() && c->is_string()) cid = c->get<std::string>();
  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string()) throw ValidationError("missing string field 'kind'");
  const auto kind = parse_message_kind(kind_it->get<std::string>());
  if (!kind) throw ValidationError("unknown kind '" + kind_it->get<std::string>() + "'");
  auto p_it = j.find("payload");
  if (p_it == j.end() || !p_it->is_object()) throw ValidationError("missing object field 'payload'");
  const auto& p = *p_it;

  if (*kind == MessageKind::ReportSubmission) {
    auto t = p.find("text");
    if (t == p.end() || !t->is_string()) throw ValidationError("ReportSubmission needs a string 'text'");
    if (cid.empty()) throw ValidationError("ReportSubmission needs a string 'correlation_id'");
    std::string text = t->get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ValidationError("report text is empty");
    return ReportSubmission{cid, std::move(text)};
  }
  if (*kind == MessageKind::Control) {
    auto a = p.find("action");
    if (a == p.end() || !a->is_string()) throw ValidationError("Control needs a string 'action'");
    const auto act = parse_control_action(a->get<std::string>());
    if (!act) throw ValidationError("unknown control action '" + a->get<std::string>() + "'");
    ControlCommand c{*act, 0.0};
    if (*act == ControlAction::Speed) {
      auto v = p.find("value");
      if (v == p.end() || !v->is_number() || v->get<double>() <= 0.0 || v->get<double>() > 1000.0)
        throw ValidationError("speed needs a numeric 'value' in (0, 1000]");
      c.speed = v->get<double>();
    }
    return c;
  }
  throw ValidationError(std::string("clients may not send ") + message_kind_name(*kind));
}

enum class ExtractionMode {
  Async,  // extraction runs on its own thread; results are picked up by tick()
  Inline  // extraction runs inside tick() (deterministic tests)
};

struct SessionOptions {
  double speed = 5.0;  // steps per second
  ExtractionMode extraction = ExtractionMode::Async;
  std::size_t top_k = 5;
};

/// The session owns its tables, hooks and RNG streams; episodes continue
/// learning with the configured epsilon schedule.
class Session {
 public:
  using Clock = std::chrono::steady_clock;
  using Outbox = std::function<void(const SessionMessage&)>;

  Session(const RunConfig& cfg, const TrialFixtures& fx, AgentVariant variant, Outbox outbox,
          SessionOptions opts = {})
      : cfg_(cfg), fx_(fx), variant_(variant), outbox_(std::move(outbox)), opts_(opts),
        ispace_(InformationSpace::sar(cfg.info_setting)), rewards_(cfg.rewards()), indexer_(fx.map),
        tables_(AgentTables::make(indexer_, variant.hierarchical)),
        rng_(make_rng(cfg.seed_base, kExplorationStream)), fac_rng_(make_rng(cfg.seed_base, kFacilitatorStream)) {
    cfg_.validate();
    if (!fx_.extractor_prompt) throw ConfigError("a session needs a prompt directory");
    extractor_ = make_backend(cfg_.extractor);
    if (variant_.facilitator) {
      fac_backend_ = cfg_.facilitator.perfect ? std::make_unique<ScriptedBackend>(perfect_facilitator_table(fx_.map))
                                              : make_backend(cfg_.facilitator.backend);
      facilitator_ = std::make_unique<Facilitator>(*fac_backend_, *fx_.facilitator_prompt, fac_rng_, cfg_.memory_path);
    }
    hooks_ = std::make_unique<AgentHooks>(fx_.map, indexer_, variant_, cfg_.shaping, cfg_.learning.gamma,
                                          facilitator_.get());
    hooks_->set_listener([this](const ShapingApplied& a) { on_applied(a); });
    new_episode();
  }

  ~Session() {
    if (inflight_ && inflight_->future.valid()) inflight_->future.wait();
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Parses and queues one client frame; schema violations are answered with
  /// an Error message immediately.
  void receive(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
      emit_error("", "malformed JSON frame");
      return;
    }
    receive(j);
  }

  void receive(const nlohmann::json& j) {
    std::string cid;
    try {
      Inbound in = parse_inbound(j, cid);
      std::lock_guard lock(inbox_mu_);
      inbox_.push_back(std::move(in));
    } catch (const ValidationError& e) {
      emit_error(cid, e.what());
    }
  }

  /// Sends the opening snapshot.
  void open() { emit_snapshot(); }

  /// Consumes queued input, collects finished extractions and, when a step is
  /// due at `now`, advances the episode by exactly one step.
  void tick(Clock::time_point now = Clock::now()) {
    drain_inbox();
    poll_extraction();
    start_extraction();
    bool step = false;
    if (step_requested_) {
      step_requested_ = false;
      step = true;
    } else if (phase_ == Phase::Running && (!last_step_ || now - *last_step_ >= period())) {
      step = true;
    }
    if (step) {
      last_step_ = now;
      advance();
    }
  }

  /// Time until the next step is due while running.
  Clock::duration period() const {
    return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / speed_));
  }

  Phase phase() const { return phase_; }
  double speed() const { return speed_; }
  std::size_t episode() const { return episode_; }
  std::size_t pending_reports() const { return reports_.size(); }
  bool extraction_in_flight() const { return inflight_.has_value(); }
  const AgentTables& tables() const { return tables_; }
  const EnvState& state() const { return runner_->state(); }
  const std::vector<EpisodeSummary>& finished_episodes() const { return finished_; }

 private:
  struct InFlight {
    ReportSubmission report;
    std::future<ExtractionResult> future;
  };

  void new_episode() {
    runner_.emplace(EpisodeContext{fx_.map, rewards_, ispace_, schedule_, cfg_.learning, indexer_, tables_, *hooks_,
                                   rng_, nullptr},
                    episode_,
                    EpisodeOptions{cfg_.step_cap.value_or(default_step_cap(fx_.map)),
                                   decay_epsilon(cfg_.learning, episode_), true});
  }

  void drain_inbox() {
    std::deque<Inbound> batch;
    {
      std::lock_guard lock(inbox_mu_);
      batch.swap(inbox_);
    }
    for (auto& in : batch) {
      if (auto* r = std::get_if<ReportSubmission>(&in)) {
        if (phase_ != Phase::Running && phase_ != Phase::Paused) {
          emit_error(r->correlation_id, "reports are accepted only while an episode is running or paused");
          continue;
        }
        reports_.push_back(std::move(*r));
      } else {
        control(std::get<ControlCommand>(in));
      }
    }
  }

  void control(const ControlCommand& c) {
    const bool needs_live = c.action == ControlAction::Start || c.action == ControlAction::Resume ||
                            c.action == ControlAction::Pause || c.action == ControlAction::Step;
    if (phase_ == Phase::Finished && needs_live) {
      emit_error("", "episode finished; send reset");
      return;
    }
    switch (c.action) {
      case ControlAction::Start:
      case ControlAction::Resume:
        if (phase_ == Phase::Idle || phase_ == Phase::Paused) phase_ = Phase::Running;
        break;
      case ControlAction::Pause:
        if (phase_ == Phase::Running || phase_ == Phase::Idle) phase_ = Phase::Paused;
        break;
      case ControlAction::Step:
        if (phase_ == Phase::Running) {
          emit_error("", "step is only valid while paused");
          return;
        }
        phase_ = Phase::Paused;
        step_requested_ = true;
        return;  // the step's own snapshot reports the result
      case ControlAction::Speed: speed_ = c.speed; break;
      case ControlAction::Reset:
        if (phase_ != Phase::Finished) finish_episode(false);
        ++episode_;
        new_episode();
        phase_ = Phase::Paused;
        break;
      case ControlAction::QTable: {
        SessionMessage m{MessageKind::Snapshot, snapshot_payload(), 0};
        const Worker w = tables_.hierarchical ? Worker::Navigate : Worker::Flat;
        m.payload["qtable"] = tables_.table(w).snapshot([&](std::size_t s) { return indexer_.key(w, s); });
        emit(std::move(m));
        return;
      }
    }
    emit_snapshot();
  }

  ExtractionResult run_extraction(const ReportSubmission& r) {
    VerbalInput v{"", r.text, Complexity::Simple};
    return extract_context(v, fx_.kb, ispace_, *extractor_, *fx_.extractor_prompt, opts_.top_k);
  }

  void start_extraction() {
    if (inflight_ || reports_.empty()) return;
    ReportSubmission r = std::move(reports_.front());
    reports_.pop_front();
    if (opts_.extraction == ExtractionMode::Inline) {
      std::promise<ExtractionResult> p;
      try {
        p.set_value(run_extraction(r));
      } catch (...) {
        p.set_exception(std::current_exception());
      }
      inflight_.emplace(InFlight{std::move(r), p.get_future()});
      poll_extraction();
      return;
    }
    auto fut = std::async(std::launch::async, [this, r] { return run_extraction(r); });
    inflight_.emplace(InFlight{std::move(r), std::move(fut)});
  }

  void poll_extraction() {
    if (!inflight_) return;
    if (inflight_->future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return;
    InFlight done = std::move(*inflight_);
    inflight_.reset();
    try {
      ExtractionResult res = done.future.get();
      const std::string cid = done.report.correlation_id;
      extraction_[cid] = res;
      hooks_->schedule({res.insights, {episode_, runner_->summary().steps}, cid});
    } catch (const BackendTimeout& e) {
      emit_error(done.report.correlation_id, std::string("extraction timed out: ") + e.what());
    } catch (const Error& e) {
      emit_error(done.report.correlation_id, std::string("extraction failed: ") + e.what());
    }
  }

  void advance() {
    if (phase_ == Phase::Finished) return;
    runner_->step();
    if (runner_->done()) {
      finish_episode(true);
      return;
    }
    emit_snapshot();
  }

  void finish_episode(bool natural) {
    if (natural) {
      finished_.push_back(runner_->summary());
      phase_ = Phase::Finished;
      emit_snapshot();
      emit_metrics();
    }
  }

  void on_applied(const ShapingApplied& a) {
    nlohmann::json ins = nlohmann::json::array();
    for (const auto& i : a.insights) ins.push_back(to_json(i));
    nlohmann::json ev{{"correlation_id", a.correlation_id},
                      {"episode", a.episode},
                      {"step", a.step},
                      {"insights", ins}};
    if (auto it = extraction_.find(a.correlation_id); it != extraction_.end()) {
      ev["hallucinations"] = it->second.hallucinations;
      ev["parse_status"] = parse_status_name(it->second.parse_status);
      ev["latency"] = it->second.latency;
      extraction_.erase(it);
    }
    emit({MessageKind::InsightEvent, std::move(ev), 0});

    const Worker w = tables_.hierarchical ? Worker::Navigate : Worker::Flat;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : a.overlay)
      entries.push_back({{"state_key", indexer_.key(w, e.state)},
                         {"action", e.action},
                         {"old", e.old_value},
                         {"new", e.new_value}});
    emit({MessageKind::ShapingDiff,
          {{"correlation_id", a.correlation_id},
           {"mode", shaping_mode()},
           {"critical", critical_json(a.critical)},
           {"entries", std::move(entries)}},
          0});
  }

  std::string shaping_mode() const {
    switch (variant_.shaping) {
      case ShapingKind::Policy: return "policy";
      case ShapingKind::Reward: return "reward";
      case ShapingKind::ActionSpace: return "action_space";
      case ShapingKind::None: break;
    }
    return "none";
  }

  static nlohmann::json coords_json(const std::set<Coord>& s) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : s) a.push_back({c.row, c.col});
    return a;
  }

  static nlohmann::json critical_json(const CriticalStateSets& c) {
    return {{"undesirable", coords_json(c.undesirable)},
            {"desirable", coords_json(c.desirable)},
            {"objective", coords_json(c.objective)}};
  }

  nlohmann::json snapshot_payload() {
    nlohmann::json p{{"phase", phase_name(phase_)},
                     {"episode", episode_},
                     {"step", runner_->summary().steps},
                     {"speed", speed_},
                     {"variant", variant_.name()},
                     {"state", state_json(runner_->state())},
                     {"pending_reports", reports_.size() + (inflight_ ? 1 : 0)},
                     {"critical", critical_json(hooks_->critical())}};
    if (!runner_->done()) {
      auto [w, mask] = runner_->peek();
      nlohmann::json task{{"worker", worker_name(w)}};
      if (const auto& a = runner_->assignment()) task["target"] = {a->target.row, a->target.col};
      p["task"] = std::move(task);
      const ActionMask base = w == Worker::Flat ? flat_base_actions() : task_actions(task_of(w));
      p["masks"] = {{"base", base.indices()}, {"current", mask.indices()}};
    } else {
      p["task"] = nullptr;
      p["masks"] = nullptr;
    }
    return p;
  }

  static TaskId task_of(Worker w) {
    switch (w) {
      case Worker::Navigate: return TaskId::Navigate;
      case Worker::CollectInfo: return TaskId::CollectInfo;
      case Worker::Triage: return TaskId::Triage;
      case Worker::Flat: break;
    }
    return TaskId::Navigate;
  }

  void emit_snapshot() { emit({MessageKind::Snapshot, snapshot_payload(), 0}); }

  void emit_metrics() {
    const auto m = compute_metrics(finished_, variant_.facilitator);
    emit({MessageKind::MetricsTick,
          {{"episodes", m.episodes}, {"msr", m.msr}, {"icsr", m.icsr}, {"mswc", m.mswc}, {"ar", m.ar}},
          0});
  }

  void emit_error(const std::string& cid, const std::string& msg) {
    nlohmann::json p{{"message", msg}};
    if (!cid.empty()) p["correlation_id"] = cid;
    emit({MessageKind::Error, std::move(p), 0});
  }

  void emit(SessionMessage m) {
    m.seq = ++seq_;
    if (outbox_) outbox_(m);
  }

  RunConfig cfg_;
  const TrialFixtures& fx_;
  AgentVariant variant_;
  Outbox outbox_;
  SessionOptions opts_;

  InformationSpace ispace_;
  RewardConfig rewards_;
  SdeSchedule schedule_;
  StateIndexer indexer_;
  AgentTables tables_;
  Rng rng_;
  Rng fac_rng_;
  std::unique_ptr<Backend> extractor_;
  std::unique_ptr<Backend> fac_backend_;
  std::unique_ptr<Facilitator> facilitator_;
  std::unique_ptr<AgentHooks> hooks_;
  std::optional<EpisodeRunner> runner_;

  Phase phase_ = Phase::Idle;
  double speed_ = opts_.speed;
  std::size_t episode_ = 0;
  std::uint64_t seq_ = 0;
  bool step_requested_ = false;
  std::optional<Clock::time_point> last_step_;

  std::mutex inbox_mu_;
  std::deque<Inbound> inbox_;
  std::deque<ReportSubmission> reports_;
  std::optional<InFlight> inflight_;
  std::map<std::string, ExtractionResult> extraction_;
  std::vector<EpisodeSummary> finished_;
};

}  // namespace lucifer
