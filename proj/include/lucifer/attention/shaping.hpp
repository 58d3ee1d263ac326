#pragma once

// The attention space: maps critical state sets to a shaped policy (Q-value
// overwrites), a shaped reward and an adjusted action space.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lucifer/attention/insight.hpp"
#include "lucifer/env/gridworld.hpp"
#include "lucifer/learning/q_table.hpp"

namespace lucifer {

enum class ReferenceMode : std::uint8_t { AvoidUndesirable, SeekDesirable };
enum class ActionMode : std::uint8_t { Prune, RestrictToPreferred, Expand, Unchanged };

struct ShapingConfig {
  double lambda_u = 100.0;
  double lambda_d = 5.0;
  double lambda_o = 10.0;
  double beta_u = 5.0;
  double beta_d = 1.0;
  double beta_o = 2.0;
  double potential_scale = 0.1;  // kappa
  ReferenceMode reference_mode = ReferenceMode::AvoidUndesirable;
  ActionMode action_mode = ActionMode::Prune;

  void validate() const {
    if (lambda_u < 0 || beta_u < 0) throw ConfigError("lambda_u and beta_u must be non-negative");
    if (potential_scale < 0) throw ConfigError("potential_scale must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Policy shaping

/// A row of a position-bearing Q table. `goal` is set for navigation workers
/// whose state carries a destination: desirable/objective cells then only
/// attract rows heading to that very cell, while undesirable cells repel all.
struct NavStateRef {
  std::size_t state = 0;
  Coord position{};
  std::optional<Coord> goal;
};

struct OverlayEntry {
  std::size_t state = 0;
  std::size_t action = 0;
  double old_value = 0.0;
  double new_value = 0.0;

  friend bool operator==(const OverlayEntry&, const OverlayEntry&) = default;
};

using PolicyOverlay = std::vector<OverlayEntry>;

/// Value Psi(s,a) for a move into `successor`, if the move is shaped.
inline std::optional<double> policy_bias(Coord position, Coord successor, const std::optional<Coord>& goal,
                                         const CriticalStateSets& crit, const ShapingConfig& cfg) {
  if (successor == position) return std::nullopt;
  if (crit.undesirable.contains(successor)) return -cfg.lambda_u;
  const bool targeted = !goal || *goal == successor;
  if (targeted && crit.desirable.contains(successor)) return cfg.lambda_d;
  if (targeted && crit.objective.contains(successor)) return cfg.lambda_o;
  return std::nullopt;
}

/// Overwrites Q(s,a) for every navigation move whose deterministic successor is
/// critical. Entries not leading into a critical cell are left untouched.
inline PolicyOverlay apply_policy_shaping(QTable& q, std::span<const NavStateRef> states,
                                          const CriticalStateSets& crit, const ShapingConfig& cfg,
                                          const GridMap& map) {
  PolicyOverlay overlay;
  if (crit.empty()) return overlay;
  for (const auto& ref : states) {
    for (std::size_t a = 0; a < kNavCount; ++a) {
      if (!q.has_action(a)) continue;
      const Coord next = map.successor(ref.position, static_cast<Direction>(a));
      auto bias = policy_bias(ref.position, next, ref.goal, crit, cfg);
      if (!bias) continue;
      overlay.push_back({ref.state, a, q.get(ref.state, a), *bias});
      q.set(ref.state, a, *bias);
    }
  }
  return overlay;
}

inline void replay_overlay(QTable& q, const PolicyOverlay& overlay) {
  for (const auto& e : overlay) q.set(e.state, e.action, e.new_value);
}

// ---------------------------------------------------------------------------
// Reward shaping

inline const std::set<Coord>* reference_set(const CriticalStateSets& crit, ReferenceMode mode,
                                            std::set<Coord>& scratch) {
  if (mode == ReferenceMode::AvoidUndesirable) return &crit.undesirable;
  scratch = crit.desirable;
  scratch.insert(crit.objective.begin(), crit.objective.end());
  return &scratch;
}

/// Phi(s) = f(min distance to the reference set): -kappa*d when seeking,
/// +kappa*d when avoiding, 0 when the reference set is empty.
inline double potential(Coord s, const CriticalStateSets& crit, const ShapingConfig& cfg) {
  std::set<Coord> scratch;
  const auto* ref = reference_set(crit, cfg.reference_mode, scratch);
  if (ref->empty()) return 0.0;
  int d = std::numeric_limits<int>::max();
  for (auto r : *ref) d = std::min(d, manhattan(s, r));
  const double k = cfg.potential_scale * static_cast<double>(d);
  return cfg.reference_mode == ReferenceMode::SeekDesirable ? -k : k;
}

inline double potential(const EnvState& s, const CriticalStateSets& crit, const ShapingConfig& cfg) {
  return potential(s.position, crit, cfg);
}

/// F(s,s') = gamma*Phi(s') - Phi(s); Phi of a terminal successor is taken as 0.
inline double shaping_term(Coord s, Coord s_next, const CriticalStateSets& crit, const ShapingConfig& cfg,
                           double gamma, bool next_terminal = false) {
  const double phi_next = next_terminal ? 0.0 : potential(s_next, crit, cfg);
  return gamma * phi_next - potential(s, crit, cfg);
}

/// Phi_Psi(s'): semantic bonus of the state entered.
inline double semantic_bonus(Coord s_next, const CriticalStateSets& crit, const ShapingConfig& cfg) {
  if (crit.undesirable.contains(s_next)) return -cfg.beta_u;
  if (crit.desirable.contains(s_next)) return cfg.beta_d;
  if (crit.objective.contains(s_next)) return cfg.beta_o;
  return 0.0;
}

/// R'' = r + F(s,s') + Phi_Psi(s').
inline double shape_reward(double r, Coord s, Coord s_next, const CriticalStateSets& crit,
                           const ShapingConfig& cfg, double gamma, bool next_terminal = false) {
  const double r_prime = r + shaping_term(s, s_next, crit, cfg, gamma, next_terminal);
  return r_prime + semantic_bonus(s_next, crit, cfg);
}

/// Per-cell cache of Phi and Phi_Psi for the hot training loop. Produces the
/// same values as shape_reward.
class RewardShaper {
 public:
  RewardShaper() = default;
  RewardShaper(const GridMap& map, const CriticalStateSets& crit, const ShapingConfig& cfg, double gamma)
      : width_(map.width()), gamma_(gamma) {
    phi_.resize(static_cast<std::size_t>(map.cell_count()));
    bonus_.resize(phi_.size());
    for (int i = 0; i < map.cell_count(); ++i) {
      phi_[static_cast<std::size_t>(i)] = potential(map.coord_of(i), crit, cfg);
      bonus_[static_cast<std::size_t>(i)] = semantic_bonus(map.coord_of(i), crit, cfg);
    }
  }

  double operator()(double r, Coord s, Coord s_next, bool next_terminal) const {
    const double phi_next = next_terminal ? 0.0 : phi_[idx(s_next)];
    const double r_prime = r + (gamma_ * phi_next - phi_[idx(s)]);
    return r_prime + bonus_[idx(s_next)];
  }

 private:
  std::size_t idx(Coord c) const { return static_cast<std::size_t>(c.row * width_ + c.col); }
  int width_ = 0;
  double gamma_ = 1.0;
  std::vector<double> phi_;
  std::vector<double> bonus_;
};

// ---------------------------------------------------------------------------
// Action-space adjustment

struct MaskAdjustment {
  ActionMask mask;
  bool fail_open = false;  // the adjusted set was empty and reverted to base
};

/// A'(s) for the current position. Only navigation actions can lead anywhere,
/// so non-navigation members of `base` pass through every mode unchanged.
/// `alphabet` bounds what Expand may add (defaults to `base`).
inline MaskAdjustment adjust_action_space(const ActionMask& base, Coord position, const CriticalStateSets& crit,
                                          const ShapingConfig& cfg, const GridMap& map,
                                          std::optional<ActionMask> alphabet = std::nullopt) {
  if (base.empty()) throw EmptyMask();
  if (crit.empty() || cfg.action_mode == ActionMode::Unchanged) return {base, false};

  auto leads_into = [&](std::size_t a, const auto& pred) {
    if (!is_nav(a)) return false;
    const Coord next = map.successor(position, static_cast<Direction>(a));
    return next != position && pred(next);
  };
  auto unsafe = [&](Coord c) { return crit.undesirable.contains(c); };
  auto preferred = [&](Coord c) { return crit.desirable.contains(c) || crit.objective.contains(c); };

  auto pruned = [&] {
    ActionMask m = base;
    for (std::size_t a : base.indices())
      if (leads_into(a, unsafe)) m.erase(a);
    return m;
  };

  ActionMask out;
  switch (cfg.action_mode) {
    case ActionMode::Prune: out = pruned(); break;
    case ActionMode::RestrictToPreferred: {
      ActionMask keep;
      bool any_nav = false;
      for (std::size_t a : base.indices()) {
        if (!is_nav(a)) {
          keep.insert(a);
        } else if (leads_into(a, preferred)) {
          keep.insert(a);
          any_nav = true;
        }
      }
      out = any_nav ? keep : pruned();
      break;
    }
    case ActionMode::Expand: {
      out = base;
      for (std::size_t a : alphabet.value_or(base).indices())
        if (leads_into(a, preferred)) out.insert(a);
      break;
    }
    case ActionMode::Unchanged: out = base; break;
  }
  if (out.empty()) return {base, true};
  return {out, false};
}

}  // namespace lucifer
