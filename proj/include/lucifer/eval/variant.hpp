#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace lucifer {

enum class ShapingKind { None, Policy, Reward, ActionSpace };

/// One row of the agent zoo.
struct AgentVariant {
  bool hierarchical = false;
  bool facilitator = false;
  ShapingKind shaping = ShapingKind::None;

  std::string name() const {
    std::string n = hierarchical ? "HierQ" : "Q";
    if (facilitator) n += "-LLM";
    switch (shaping) {
      case ShapingKind::Policy: n += "-PS"; break;
      case ShapingKind::Reward: n += "-RS"; break;
      case ShapingKind::ActionSpace: n += "-AS"; break;
      case ShapingKind::None: break;
    }
    return n;
  }
  friend bool operator==(const AgentVariant&, const AgentVariant&) = default;
};

inline const std::array<AgentVariant, 10>& all_variants() {
  static const std::array<AgentVariant, 10> kAll = {{
      {false, false, ShapingKind::None},
      {false, false, ShapingKind::Policy},
      {false, false, ShapingKind::Reward},
      {false, false, ShapingKind::ActionSpace},
      {true, false, ShapingKind::None},
      {true, true, ShapingKind::None},
      {true, false, ShapingKind::Policy},
      {true, false, ShapingKind::Reward},
      {true, false, ShapingKind::ActionSpace},
      {true, true, ShapingKind::Policy},
  }};
  return kAll;
}

/// Accepts exactly the ten zoo names (case-sensitive).
inline std::optional<AgentVariant> parse_variant(std::string_view s) {
  for (const auto& v : all_variants())
    if (v.name() == s) return v;
  return std::nullopt;
}

}  // namespace lucifer
