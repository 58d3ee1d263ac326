#pragma once

// Exploration facilitator: asks a model which action to try, given the
// current state, the recent trajectory and past outcomes at this cell.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/env/gridworld.hpp"
#include "lucifer/learning/q_learning.hpp"
#include "lucifer/llm/backend.hpp"
#include "lucifer/llm/prompt.hpp"

namespace lucifer {

struct Transition {
  EnvState state;
  std::size_t action = 0;
  EnvState next_state;
  double reward = 0.0;
};

/// Short-term, per-episode record.
class TrajectoryBuffer {
 public:
  void clear() { items_.clear(); }
  void push(Transition t) { items_.push_back(std::move(t)); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Transition>& items() const { return items_; }

  std::vector<Transition> tail(std::size_t n) const {
    const auto from = items_.size() > n ? items_.size() - n : 0;
    return {items_.begin() + static_cast<std::ptrdiff_t>(from), items_.end()};
  }

 private:
  std::vector<Transition> items_;
};

struct MemoryRecord {
  Coord coordinate{};
  std::size_t action = 0;
  bool success = false;
  std::size_t count = 0;

  friend bool operator==(const MemoryRecord&, const MemoryRecord&) = default;
};

/// Persistent per-location record of attempted actions and their outcomes.
class MemoryBuffer {
 public:
  void record_outcome(Coord c, std::size_t action, bool success) { ++counts_[{c, action, success}]; }

  std::vector<MemoryRecord> records() const {
    std::vector<MemoryRecord> out;
    out.reserve(counts_.size());
    for (const auto& [k, n] : counts_) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), n});
    return out;
  }

  std::vector<MemoryRecord> records_at(Coord c) const {
    std::vector<MemoryRecord> out;
    for (const auto& r : records())
      if (r.coordinate == c) out.push_back(r);
    return out;
  }

  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  void clear() { counts_.clear(); }

  /// JSON lines, one record per line, sorted by (coordinate, action, outcome).
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw PersistenceError("cannot write memory buffer to " + path);
    for (const auto& r : records()) {
      nlohmann::json j{{"coordinate", {r.coordinate.row, r.coordinate.col}},
                       {"action", r.action},
                       {"outcome", r.success ? "success" : "failure"},
                       {"count", r.count}};
      out << j.dump() << '\n';
    }
    if (!out) throw PersistenceError("write failed for " + path);
  }

  /// Missing file loads as empty.
  static MemoryBuffer load(const std::string& path) {
    MemoryBuffer m;
    if (!std::filesystem::exists(path)) return m;
    std::ifstream in(path);
    if (!in) throw PersistenceError("cannot read memory buffer " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        const Coord c{j.at("coordinate").at(0).get<int>(), j.at("coordinate").at(1).get<int>()};
        const auto outcome = j.at("outcome").get<std::string>();
        if (outcome != "success" && outcome != "failure") throw PersistenceError("bad outcome");
        m.counts_[{c, j.at("action").get<std::size_t>(), outcome == "success"}] += j.at("count").get<std::size_t>();
      } catch (const nlohmann::json::exception& e) {
        throw PersistenceError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return m;
  }

  friend bool operator==(const MemoryBuffer&, const MemoryBuffer&) = default;

 private:
  std::map<std::tuple<Coord, std::size_t, bool>, std::size_t> counts_;
};

enum class FacilitatorEvent { None, ParseFallback, TimeoutFallback };

inline const char* facilitator_event_name(FacilitatorEvent e) {
  switch (e) {
    case FacilitatorEvent::None: return "none";
    case FacilitatorEvent::ParseFallback: return "parse_fallback";
    case FacilitatorEvent::TimeoutFallback: return "timeout_fallback";
  }
  return "?";
}

struct FacilitatorPrediction {
  std::size_t action = 0;
  FacilitatorEvent event = FacilitatorEvent::None;
  std::string raw_response;
};

inline constexpr std::size_t kTrajectoryTail = 10;

inline std::string facilitator_lookup_key(const EnvState& s) {
  return "pos=" + std::to_string(s.position.row) + "," + std::to_string(s.position.col);
}

inline std::string encode_state(const EnvState& s) {
  std::ostringstream os;
  os << "position=" << s.position << " collected=[";
  bool first = true;
  for (std::size_t t = 0; t < kInfoTypeCount; ++t) {
    if (!s.collected.test(t)) continue;
    os << (first ? "" : ",") << static_cast<char>('a' + t);
    first = false;
  }
  os << "] rescued=" << (s.rescued ? "yes" : "no");
  return os.str();
}

inline std::string render_facilitator_prompt(const EnvState& s, const TrajectoryBuffer& xi, const MemoryBuffer& d,
                                             const ActionMask& allowed, const PromptTemplate& tmpl) {
  std::ostringstream traj;
  for (const auto& t : xi.tail(kTrajectoryTail))
    traj << "- " << t.state.position << " " << action_token(t.action) << " -> " << t.next_state.position
         << " reward=" << t.reward << '\n';
  if (xi.empty()) traj << "(none)\n";
  std::ostringstream mem;
  const auto recs = d.records_at(s.position);
  for (const auto& r : recs)
    mem << "- " << action_token(r.action) << ": " << (r.success ? "success" : "failure") << " x" << r.count << '\n';
  if (recs.empty()) mem << "(none)\n";
  std::ostringstream acts;
  for (std::size_t a : allowed.indices()) acts << action_token(a) << '\n';
  return tmpl.render({{"state", encode_state(s)},
                      {"trajectory", traj.str()},
                      {"memory", mem.str()},
                      {"allowed_actions", acts.str()}});
}

/// Returns an action that is always a member of `allowed`.
template <class Urbg>
FacilitatorPrediction predict_action(const EnvState& s, const TrajectoryBuffer& xi, const MemoryBuffer& d,
                                     const ActionMask& allowed, Backend& backend, const PromptTemplate& tmpl,
                                     Urbg& rng) {
  if (allowed.empty()) throw EmptyMask();
  ChatRequest req;
  req.messages = {{"system", "You choose the next action for a search-and-rescue agent."},
                  {"user", render_facilitator_prompt(s, xi, d, allowed, tmpl)}};
  req.lookup_key = facilitator_lookup_key(s);

  FacilitatorPrediction out;
  try {
    out.raw_response = backend.complete(req).content;
    std::string first = out.raw_response.substr(0, out.raw_response.find('\n'));
    if (auto a = parse_action_token(first); a && allowed.contains(*a)) {
      out.action = *a;
      return out;
    }
    out.event = FacilitatorEvent::ParseFallback;
  } catch (const BackendTimeout&) {
    out.event = FacilitatorEvent::TimeoutFallback;
  }
  out.action = uniform_action(allowed, rng);
  return out;
}

/// Scripted table of a facilitator that always names the right Collect action.
inline std::map<std::string, std::string> perfect_facilitator_table(const GridMap& map) {
  std::map<std::string, std::string> table;
  for (Coord p : map.collection_points()) {
    EnvState s;
    s.position = p;
    table[facilitator_lookup_key(s)] = action_token(kCollectBase + static_cast<std::size_t>(map.at(p).required_info_type));
  }
  return table;
}

}  // namespace lucifer
