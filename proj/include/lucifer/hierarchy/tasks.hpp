#pragma once

// Strategic Decision Engine: the pre-defined task transition process, the
// termination predicates and the Information Space that gates triage.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lucifer/core.hpp"
#include "lucifer/env/gridworld.hpp"

namespace lucifer {

struct InfoTypeDescriptor {
  std::string name;
  std::string description;
};

/// Catalog of mission-relevant information categories plus the readiness rule.
struct InformationSpace {
  std::vector<InfoTypeDescriptor> info_types;
  int required_count = 3;
  std::vector<std::string> extraction_categories{"POI", "HAZ"};

  bool ready(const EnvState& s) const { return s.collected_count() == required_count; }

  void validate() const {
    if (info_types.size() > kInfoTypeCount) throw ValidationError("more than 26 info types");
    if (required_count < 0 || required_count > static_cast<int>(info_types.size()))
      throw ValidationError("required_count exceeds the number of info types");
    std::set<std::string> names;
    for (const auto& t : info_types)
      if (!names.insert(t.name).second) throw ValidationError("duplicate info type name " + t.name);
  }

  /// The 26 SAR info categories, indexed like the Collect actions.
  static InformationSpace sar(int required_count) {
    static const std::vector<InfoTypeDescriptor> kTypes = {
        {"structural_damage", "state of load-bearing structures"},
        {"gas_leak", "presence of gas or chemical leaks"},
        {"fire_status", "active fires or smoke"},
        {"water_level", "flooding depth"},
        {"debris_density", "rubble blocking movement"},
        {"electrical_hazard", "exposed or live wiring"},
        {"victim_count", "number of people trapped"},
        {"victim_vitals", "responsiveness of trapped people"},
        {"access_route", "passable approach to the site"},
        {"aftershock_risk", "likelihood of further collapse"},
        {"air_quality", "dust and toxic air"},
        {"medical_supply", "available medical equipment"},
        {"comms_status", "radio and network coverage"},
        {"lighting", "visibility on site"},
        {"temperature", "heat or cold exposure"},
        {"crowd_presence", "bystanders near the site"},
        {"vehicle_access", "whether vehicles can reach"},
        {"shelter_capacity", "space in nearby shelters"},
        {"water_supply", "drinkable water availability"},
        {"hazmat", "hazardous materials stored nearby"},
        {"animal_presence", "animals that may interfere"},
        {"noise_level", "ability to hear calls for help"},
        {"ground_stability", "soil and pavement stability"},
        {"weather", "rain, wind and forecast"},
        {"team_location", "positions of other responders"},
        {"landing_zone", "helicopter landing options"},
    };
    InformationSpace s;
    s.info_types = kTypes;
    s.required_count = required_count;
    return s;
  }
};

struct MissionDone {
  friend bool operator==(const MissionDone&, const MissionDone&) = default;
};

struct TaskAssignment {
  TaskId task = TaskId::Navigate;
  Coord target{};
  /// Index of the target among the map's collection points; equals
  /// collection_points().size() when the target is the victim.
  std::size_t target_index = 0;
  int info_type = -1;  // CollectInfo only

  friend bool operator==(const TaskAssignment&, const TaskAssignment&) = default;
};

enum class ScheduleMode { PreDefined, LearnedPolicy };
enum class VisitOrder { NearestFirst };

struct SdeSchedule {
  ScheduleMode mode = ScheduleMode::PreDefined;
  VisitOrder visit_order = VisitOrder::NearestFirst;
};

using Assignment = std::variant<TaskAssignment, MissionDone>;

/// True when the collection point's info type is still missing.
inline bool point_uncollected(const EnvState& s, const GridMap& map, Coord p) {
  return !s.collected.test(static_cast<std::size_t>(map.at(p).required_info_type));
}

inline Assignment next_assignment(const EnvState& state, const GridMap& map, const InformationSpace& ispace,
                                  const SdeSchedule& schedule = {}) {
  if (schedule.mode != ScheduleMode::PreDefined)
    throw ConfigError("only the pre-defined task transition process is available");
  if (state.rescued) return MissionDone{};
  const auto& points = map.collection_points();

  if (!ispace.ready(state)) {
    const auto dist = bfs_distances(map, state.position);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!point_uncollected(state, map, points[i])) continue;
      if (dist[static_cast<std::size_t>(map.index_of(points[i]))] < 0) continue;
      // Row-major order of collection_points breaks Manhattan ties.
      if (!best || manhattan(state.position, points[i]) < manhattan(state.position, points[*best])) best = i;
    }
    if (!best) throw NoReachableTarget("no reachable uncollected collection point from " + to_string(state.position));
    const Coord p = points[*best];
    const int type = map.at(p).required_info_type;
    if (p == state.position) return TaskAssignment{TaskId::CollectInfo, p, *best, type};
    return TaskAssignment{TaskId::Navigate, p, *best, type};
  }

  const Coord victim = map.victim();
  if (state.position == victim) return TaskAssignment{TaskId::Triage, victim, points.size(), -1};
  if (bfs_distances(map, state.position)[static_cast<std::size_t>(map.index_of(victim))] < 0)
    throw NoReachableTarget("victim unreachable from " + to_string(state.position));
  return TaskAssignment{TaskId::Navigate, victim, points.size(), -1};
}

/// beta(s) for the assignment.
inline bool check_termination(const TaskAssignment& assignment, const EnvState& state) {
  switch (assignment.task) {
    case TaskId::Navigate: return state.position == assignment.target;
    case TaskId::CollectInfo:
      return assignment.info_type >= 0 && state.collected.test(static_cast<std::size_t>(assignment.info_type));
    case TaskId::Triage: return state.rescued;
  }
  return false;
}

}  // namespace lucifer
