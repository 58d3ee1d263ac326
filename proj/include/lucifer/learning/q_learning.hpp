#pragma once

// Off-policy tabular Q-learning with masked TD targets and epsilon-greedy
// selection that can hand its exploratory draws to an external predictor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>

#include "lucifer/core.hpp"
#include "lucifer/learning/q_table.hpp"

namespace lucifer {

struct LearningParams {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;
  double epsilon_min = 0.05;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start))
      throw ConfigError("epsilon_min must lie in [0, epsilon_start]");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
      throw ConfigError("epsilon_decay must lie in (0,1]");
  }
};

/// max over a' in (mask ∩ alphabet) of Q(s, a').
inline double masked_max(const QTable& q, std::size_t s, const ActionMask& mask) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t a : q.actions()) {
    if (!mask.contains(a)) continue;
    const double v = q.get(s, a);
    if (!any || v > best) best = v;
    any = true;
  }
  if (!any) throw EmptyMask();
  return best;
}

/// One Q-learning backup. `next_state` empty means s' is terminal and the
/// bootstrap term is dropped. Returns the updated value.
inline double td_update(QTable& q, std::size_t s, std::size_t a, double reward,
                        std::optional<std::size_t> next_state, const ActionMask& mask_next,
                        const LearningParams& p) {
  const double old = q.get(s, a);
  double target = reward;
  if (next_state) target = reward + p.gamma * masked_max(q, *next_state, mask_next);
  const double updated = old + p.alpha * (target - old);
  q.set(s, a, updated);
  return updated;
}

inline double decay_epsilon(const LearningParams& p, std::size_t episode) {
  return std::max(p.epsilon_min,
                  p.epsilon_start * std::pow(p.epsilon_decay, static_cast<double>(episode)));
}

enum class SelectionSource : std::uint8_t { Greedy, Random, Facilitator };

inline const char* source_name(SelectionSource s) {
  switch (s) {
    case SelectionSource::Greedy: return "greedy";
    case SelectionSource::Random: return "random";
    case SelectionSource::Facilitator: return "facilitator";
  }
  return "?";
}

struct Selection {
  std::size_t action = 0;
  SelectionSource source = SelectionSource::Greedy;
};

/// Delegate for exploratory choices; returning nullopt (or an action outside
/// the mask) falls back to a uniform draw.
using ExplorationHook = std::function<std::optional<std::size_t>(const ActionMask&)>;

/// Greedy action over the masked row; ties go to the lowest action index.
inline std::size_t greedy_action(const QTable& q, std::size_t s, const ActionMask& mask) {
  std::size_t best_a = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t a : q.actions()) {
    if (!mask.contains(a)) continue;
    const double v = q.get(s, a);
    if (!any || v > best) {
      best = v;
      best_a = a;
    }
    any = true;
  }
  if (!any) throw EmptyMask();
  return best_a;
}

template <class Rng>
std::size_t uniform_action(const ActionMask& mask, Rng& rng) {
  const auto n = mask.size();
  if (n == 0) throw EmptyMask();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t k = pick(rng);
  for (std::size_t a = 0; a < kActionCount; ++a) {
    if (!mask.contains(a)) continue;
    if (k-- == 0) return a;
  }
  return 0;  // unreachable
}

template <class Rng>
Selection select_action(const QTable& q, std::size_t s, const ActionMask& mask, double epsilon,
                        Rng& rng, const ExplorationHook* facilitator = nullptr) {
  if ((mask & q.alphabet()).empty()) throw EmptyMask();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) >= epsilon) return {greedy_action(q, s, mask), SelectionSource::Greedy};
  if (facilitator && *facilitator) {
    if (auto a = (*facilitator)(mask); a && mask.contains(*a) && q.has_action(*a))
      return {*a, SelectionSource::Facilitator};
  }
  return {uniform_action(mask & q.alphabet(), rng), SelectionSource::Random};
}

}  // namespace lucifer
