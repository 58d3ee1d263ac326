#pragma once

// Value-iteration oracle used by the test suites: exact Bellman optimality
// sweeps over a small finite MDP, using the same masked max as td_update.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "lucifer/core.hpp"
#include "lucifer/env/gridworld.hpp"

namespace lucifer {

struct MdpTransition {
  std::size_t next = 0;
  double reward = 0.0;
};

struct FiniteMdp {
  std::size_t state_count = 0;
  std::size_t action_count = 0;
  std::function<MdpTransition(std::size_t, std::size_t)> transition;
  /// Absorbing states; their value is fixed at terminal_value(s).
  std::function<bool(std::size_t)> is_terminal = [](std::size_t) { return false; };
  std::function<double(std::size_t)> terminal_value = [](std::size_t) { return 0.0; };
  std::function<bool(std::size_t, std::size_t)> allowed = [](std::size_t, std::size_t) { return true; };
};

struct OracleResult {
  std::vector<double> values;
  /// q[s * action_count + a]; NaN where the action is masked out or s is terminal.
  std::vector<double> q;
  /// Greedy action per state (lowest index among ties); -1 for terminal states.
  std::vector<int> policy;
  std::size_t action_count = 0;
  std::size_t iterations = 0;

  double q_at(std::size_t s, std::size_t a) const { return q[s * action_count + a]; }

  /// All actions within `tie_tolerance` of the best at state s.
  std::vector<std::size_t> argmax_set(std::size_t s, double tie_tolerance = 1e-6) const {
    std::vector<std::size_t> out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < action_count; ++a)
      if (!std::isnan(q_at(s, a))) best = std::max(best, q_at(s, a));
    for (std::size_t a = 0; a < action_count; ++a)
      if (!std::isnan(q_at(s, a)) && q_at(s, a) >= best - tie_tolerance) out.push_back(a);
    return out;
  }
};

inline OracleResult value_iteration_oracle(const FiniteMdp& mdp, double gamma, double tolerance,
                                           std::size_t max_iterations = 100000,
                                           double tie_tolerance = 1e-9) {
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  const auto n = mdp.state_count;
  const auto m = mdp.action_count;
  OracleResult res;
  res.action_count = m;
  res.values.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    if (mdp.is_terminal(s)) res.values[s] = mdp.terminal_value(s);

  std::vector<double> next(n);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.is_terminal(s)) {
        next[s] = res.values[s];
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t a = 0; a < m; ++a) {
        if (!mdp.allowed(s, a)) continue;
        auto t = mdp.transition(s, a);
        best = std::max(best, t.reward + gamma * res.values[t.next]);
        any = true;
      }
      if (!any) throw EmptyMask();
      next[s] = best;
      residual = std::max(residual, std::abs(best - res.values[s]));
    }
    res.values.swap(next);
    res.iterations = it;
    if (residual < tolerance) break;
    if (it == max_iterations)
      throw NonConvergence("value iteration did not converge in " + std::to_string(max_iterations) +
                           " sweeps (residual " + std::to_string(residual) + ")");
  }

  res.q.assign(n * m, std::numeric_limits<double>::quiet_NaN());
  res.policy.assign(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      if (!mdp.allowed(s, a)) continue;
      auto t = mdp.transition(s, a);
      const double v = t.reward + gamma * res.values[t.next];
      res.q[s * m + a] = v;
      if (res.policy[s] < 0 || v > best + tie_tolerance) {
        best = v;
        res.policy[s] = static_cast<int>(a);
      }
    }
  }
  return res;
}

/// Reward of a navigation move from `from` to `to` (terminal when `to` is the goal).
using NavRewardFn = std::function<double(Coord from, Direction d, Coord to, bool terminal)>;
/// Whether navigation move `d` is allowed at `at`.
using NavMaskFn = std::function<bool(Coord at, Direction d)>;

inline NavRewardFn env_nav_reward(const GridMap& map, const RewardConfig& cfg) {
  return [&map, cfg](Coord, Direction, Coord to, bool) {
    double r = cfg.step_penalty;
    if (map.at(to).type == CellType::Hazard) r += cfg.hazard_penalty;
    return r;
  };
}

/// Navigation MDP over the map's cells: four moves, blocked moves stay put,
/// `goal` is absorbing. State index = map.index_of(cell); obstacle cells are
/// unreachable and treated as absorbing with value 0.
inline FiniteMdp navigation_mdp(const GridMap& map, Coord goal, NavRewardFn reward_fn,
                                NavMaskFn mask_fn = nullptr) {
  FiniteMdp mdp;
  mdp.state_count = static_cast<std::size_t>(map.cell_count());
  mdp.action_count = kNavCount;
  const int goal_index = map.index_of(goal);
  mdp.is_terminal = [&map, goal_index](std::size_t s) {
    return static_cast<int>(s) == goal_index ||
           map.at(map.coord_of(static_cast<int>(s))).type == CellType::Obstacle;
  };
  mdp.transition = [&map, goal, reward_fn](std::size_t s, std::size_t a) {
    const Coord from = map.coord_of(static_cast<int>(s));
    const auto d = static_cast<Direction>(a);
    const Coord to = map.successor(from, d);
    return MdpTransition{static_cast<std::size_t>(map.index_of(to)), reward_fn(from, d, to, to == goal)};
  };
  if (mask_fn) {
    mdp.allowed = [&map, mask_fn](std::size_t s, std::size_t a) {
      return mask_fn(map.coord_of(static_cast<int>(s)), static_cast<Direction>(a));
    };
  }
  return mdp;
}

/// Oracle over the navigation MDP of `map` toward `goal`.
inline OracleResult value_iteration_oracle(const GridMap& map, Coord goal, const NavRewardFn& reward_fn,
                                           const NavMaskFn& mask_fn, double gamma, double tolerance) {
  return value_iteration_oracle(navigation_mdp(map, goal, reward_fn, mask_fn), gamma, tolerance);
}

}  // namespace lucifer
