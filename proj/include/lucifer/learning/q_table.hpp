#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/core.hpp"
#include "lucifer/env/actions.hpp"

namespace lucifer {

/// Dense tabular action-value store over a fixed action alphabet (a subset of
/// the 34 global actions). Rows are indexed by a worker-specific state index;
/// columns by the alphabet's global action indices in ascending order.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, ActionSet alphabet, double init = 0.0)
      : states_(states), alphabet_(alphabet), actions_(alphabet.indices()) {
    local_.fill(-1);
    for (std::size_t i = 0; i < actions_.size(); ++i) local_[actions_[i]] = static_cast<int>(i);
    values_.assign(states_ * actions_.size(), init);
  }

  std::size_t state_count() const { return states_; }
  std::size_t action_count() const { return actions_.size(); }
  const std::vector<std::size_t>& actions() const { return actions_; }
  const ActionSet& alphabet() const { return alphabet_; }
  bool has_action(std::size_t a) const { return a < kActionCount && local_[a] >= 0; }

  double get(std::size_t s, std::size_t a) const { return values_[offset(s, a)]; }
  void set(std::size_t s, std::size_t a, double v) { values_[offset(s, a)] = v; }

  std::span<const double> row(std::size_t s) const {
    return {values_.data() + s * actions_.size(), actions_.size()};
  }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  const std::vector<double>& raw() const { return values_; }
  friend bool operator==(const QTable&, const QTable&) = default;

  /// Snapshot as {state_key: [values in alphabet order]}; only rows with a
  /// non-zero entry are emitted.
  nlohmann::json snapshot(const std::function<std::string(std::size_t)>& key_of) const {
    nlohmann::json out = nlohmann::json::object();
    for (std::size_t s = 0; s < states_; ++s) {
      auto r = row(s);
      bool touched = false;
      for (double v : r) touched = touched || v != 0.0;
      if (!touched) continue;
      out[key_of(s)] = std::vector<double>(r.begin(), r.end());
    }
    return out;
  }

 private:
  std::size_t offset(std::size_t s, std::size_t a) const {
    if (s >= states_ || !has_action(a)) throw Error("QTable index out of range");
    return s * actions_.size() + static_cast<std::size_t>(local_[a]);
  }

  std::size_t states_ = 0;
  ActionSet alphabet_;
  std::vector<std::size_t> actions_;
  std::array<int, kActionCount> local_{};
  std::vector<double> values_;
};

}  // namespace lucifer
