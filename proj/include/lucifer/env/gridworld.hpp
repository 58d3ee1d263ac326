#pragma once

// Deterministic SAR gridworld dynamics: reset, step and the per-task action
// partitions.

#include <bit>
#include <bitset>
#include <cstdint>
#include <string>
#include <vector>

#include "lucifer/core.hpp"
#include "lucifer/env/actions.hpp"
#include "lucifer/env/grid_map.hpp"

namespace lucifer {

using InfoMask = std::bitset<kInfoTypeCount>;

struct EnvState {
  Coord position{};
  InfoMask collected{};
  bool rescued = false;

  int collected_count() const { return static_cast<int>(collected.count()); }
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

enum class RewardMode : std::uint8_t { Sparse, NonSparse };

struct RewardConfig {
  RewardMode mode = RewardMode::NonSparse;
  double step_penalty = -0.1;
  double hazard_penalty = -5.0;
  double collect_reward = 10.0;
  double mission_reward = 100.0;
  double wrong_collect_penalty = -1.0;

  static RewardConfig non_sparse() { return {}; }
  static RewardConfig sparse() {
    RewardConfig c;
    c.mode = RewardMode::Sparse;
    c.collect_reward = 0.0;
    c.wrong_collect_penalty = 0.0;
    return c;
  }
};

enum class Event : std::uint8_t {
  HazardHit = 1u << 0,
  CorrectCollect = 1u << 1,
  WrongCollect = 1u << 2,
  MissionComplete = 1u << 3,
  WallBump = 1u << 4,
};

class EventSet {
 public:
  void add(Event e) { bits_ |= static_cast<std::uint8_t>(e); }
  bool has(Event e) const { return (bits_ & static_cast<std::uint8_t>(e)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::uint8_t raw() const { return bits_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (has(Event::HazardHit)) out.emplace_back("HazardHit");
    if (has(Event::CorrectCollect)) out.emplace_back("CorrectCollect");
    if (has(Event::WrongCollect)) out.emplace_back("WrongCollect");
    if (has(Event::MissionComplete)) out.emplace_back("MissionComplete");
    if (has(Event::WallBump)) out.emplace_back("WallBump");
    return out;
  }
  friend bool operator==(const EventSet&, const EventSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  bool terminated = false;
  EventSet events;
  int collected_type = -1;  // info type set by a CorrectCollect, else -1
};

inline EnvState reset(const GridMap& map, Coord start) {
  if (!map.in_bounds(start)) throw InvalidStart("start " + to_string(start) + " out of bounds");
  if (!map.passable(start)) throw InvalidStart("start " + to_string(start) + " is an obstacle");
  return EnvState{start, {}, false};
}

inline EnvState reset(const GridMap& map) { return reset(map, map.start()); }

/// True when Collect(t) at `s` would succeed.
inline bool collect_succeeds(const EnvState& s, int info_type, const GridMap& map) {
  const auto& cell = map.at(s.position);
  return cell.type == CellType::InfoPoint && cell.required_info_type == info_type &&
         !s.collected.test(static_cast<std::size_t>(info_type)) &&
         s.collected_count() < map.info_requirement();
}

/// True when standing where some Collect action can still succeed.
inline bool at_collectable_point(const EnvState& s, const GridMap& map) {
  const auto& cell = map.at(s.position);
  return cell.type == CellType::InfoPoint && collect_succeeds(s, cell.required_info_type, map);
}

inline StepOutcome step(const EnvState& state, std::size_t action, const GridMap& map,
                        const RewardConfig& cfg) {
  StepOutcome out;
  out.next_state = state;
  if (state.rescued) {
    out.terminated = true;
    return out;
  }
  out.reward = cfg.step_penalty;
  const ActionId id = action_from_index(action);

  if (const auto* nav = std::get_if<Nav>(&id)) {
    Coord to = step_toward(state.position, nav->dir);
    if (map.passable(to)) {
      out.next_state.position = to;
    } else {
      out.events.add(Event::WallBump);
    }
  } else if (const auto* col = std::get_if<Collect>(&id)) {
    if (collect_succeeds(state, col->info_type, map)) {
      out.next_state.collected.set(static_cast<std::size_t>(col->info_type));
      out.events.add(Event::CorrectCollect);
      out.collected_type = col->info_type;
      out.reward += cfg.collect_reward;
    } else {
      out.events.add(Event::WrongCollect);
      out.reward += cfg.wrong_collect_penalty;
    }
  } else {
    const auto& tri = std::get<Triage>(id);
    const bool ready = state.collected_count() == map.info_requirement();
    if (map.at(state.position).type == CellType::Victim && ready &&
        tri.procedure == map.triage_procedure()) {
      out.next_state.rescued = true;
      out.events.add(Event::MissionComplete);
      out.reward += cfg.mission_reward;
      out.terminated = true;
    } else {
      out.events.add(Event::WrongCollect);
      out.reward += cfg.wrong_collect_penalty;
    }
  }

  if (map.at(out.next_state.position).type == CellType::Hazard) {
    out.events.add(Event::HazardHit);
    out.reward += cfg.hazard_penalty;
  }
  return out;
}

/// Base action subset owned by the worker for `task`.
inline ActionSet valid_base_actions(const EnvState&, TaskId task) { return task_actions(task); }

/// Flat agents act over the whole alphabet.
inline ActionSet flat_base_actions() { return ActionSet::all(); }

}  // namespace lucifer
