#pragma once

// The 34-action alphabet: 4 navigation moves, 26 collection actions (one per
// info type) and 4 triage procedures. Integer indices are stable:
// Nav 0-3, Collect 4-29, Triage 30-33.

#include <bitset>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lucifer/core.hpp"

namespace lucifer {

inline constexpr std::size_t kNavCount = 4;
inline constexpr std::size_t kCollectCount = 26;
inline constexpr std::size_t kTriageCount = 4;
inline constexpr std::size_t kActionCount = kNavCount + kCollectCount + kTriageCount;
inline constexpr std::size_t kCollectBase = kNavCount;
inline constexpr std::size_t kTriageBase = kNavCount + kCollectCount;
inline constexpr std::size_t kInfoTypeCount = kCollectCount;

enum class Direction : std::uint8_t { North = 0, South = 1, East = 2, West = 3 };

struct Nav {
  Direction dir;
  friend constexpr bool operator==(const Nav&, const Nav&) = default;
};
struct Collect {
  int info_type;
  friend constexpr bool operator==(const Collect&, const Collect&) = default;
};
struct Triage {
  int procedure;
  friend constexpr bool operator==(const Triage&, const Triage&) = default;
};

using ActionId = std::variant<Nav, Collect, Triage>;

/// Sub-tasks of the mission; each owns a disjoint slice of the action alphabet.
enum class TaskId : std::uint8_t { Navigate = 0, CollectInfo = 1, Triage = 2 };

inline constexpr std::string_view task_name(TaskId t) noexcept {
  switch (t) {
    case TaskId::Navigate: return "navigate";
    case TaskId::CollectInfo: return "collect";
    case TaskId::Triage: return "triage";
  }
  return "?";
}

inline std::optional<TaskId> parse_task(std::string_view s) {
  if (s == "navigate") return TaskId::Navigate;
  if (s == "collect") return TaskId::CollectInfo;
  if (s == "triage") return TaskId::Triage;
  return std::nullopt;
}

constexpr std::size_t action_index(const ActionId& a) {
  if (auto* n = std::get_if<Nav>(&a)) return static_cast<std::size_t>(n->dir);
  if (auto* c = std::get_if<Collect>(&a)) return kCollectBase + static_cast<std::size_t>(c->info_type);
  return kTriageBase + static_cast<std::size_t>(std::get<Triage>(a).procedure);
}

constexpr ActionId action_from_index(std::size_t i) {
  if (i < kCollectBase) return Nav{static_cast<Direction>(i)};
  if (i < kTriageBase) return Collect{static_cast<int>(i - kCollectBase)};
  return Triage{static_cast<int>(i - kTriageBase)};
}

constexpr bool is_nav(std::size_t a) noexcept { return a < kCollectBase; }
constexpr bool is_collect(std::size_t a) noexcept { return a >= kCollectBase && a < kTriageBase; }
constexpr bool is_triage(std::size_t a) noexcept { return a >= kTriageBase && a < kActionCount; }

constexpr Coord step_toward(Coord c, Direction d) noexcept {
  switch (d) {
    case Direction::North: return {c.row - 1, c.col};
    case Direction::South: return {c.row + 1, c.col};
    case Direction::East: return {c.row, c.col + 1};
    case Direction::West: return {c.row, c.col - 1};
  }
  return c;
}

/// Text token for an action, used in prompts, logs and the CLI trace.
inline std::string action_token(std::size_t a) {
  static constexpr const char* kNav[] = {"nav_north", "nav_south", "nav_east", "nav_west"};
  if (is_nav(a)) return kNav[a];
  if (is_collect(a)) return std::string("collect_") + static_cast<char>('a' + (a - kCollectBase));
  if (is_triage(a)) return "triage_" + std::to_string(a - kTriageBase);
  return "invalid";
}

/// Accepts a token as produced by action_token (case-insensitive, surrounding
/// quotes/punctuation ignored) or a bare integer index.
inline std::optional<std::size_t> parse_action_token(std::string_view raw) {
  std::string s;
  for (char ch : raw) {
    unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || ch == '_') s.push_back(static_cast<char>(std::tolower(u)));
  }
  if (s.empty()) return std::nullopt;
  bool digits = true;
  for (char ch : s) digits = digits && std::isdigit(static_cast<unsigned char>(ch));
  if (digits) {
    if (s.size() > 2) return std::nullopt;
    std::size_t v = std::stoul(s);
    return v < kActionCount ? std::optional<std::size_t>(v) : std::nullopt;
  }
  for (std::size_t a = 0; a < kActionCount; ++a)
    if (s == action_token(a)) return a;
  return std::nullopt;
}

/// A subset of the 34-action alphabet. Also serves as the ActionMask A'(s).
class ActionSet {
 public:
  constexpr ActionSet() = default;
  explicit ActionSet(std::bitset<kActionCount> bits) : bits_(bits) {}
  ActionSet(std::initializer_list<std::size_t> actions) {
    for (auto a : actions) bits_.set(a);
  }

  static ActionSet range(std::size_t first, std::size_t last) {
    ActionSet s;
    for (auto a = first; a < last; ++a) s.bits_.set(a);
    return s;
  }
  static ActionSet all() { return range(0, kActionCount); }

  bool contains(std::size_t a) const { return a < kActionCount && bits_.test(a); }
  void insert(std::size_t a) { bits_.set(a); }
  void erase(std::size_t a) { bits_.reset(a); }
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  const std::bitset<kActionCount>& bits() const { return bits_; }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (std::size_t a = 0; a < kActionCount; ++a)
      if (bits_.test(a)) out.push_back(a);
    return out;
  }

  friend ActionSet operator|(ActionSet a, ActionSet b) { return ActionSet(a.bits_ | b.bits_); }
  friend ActionSet operator&(ActionSet a, ActionSet b) { return ActionSet(a.bits_ & b.bits_); }
  friend bool operator==(const ActionSet&, const ActionSet&) = default;

 private:
  std::bitset<kActionCount> bits_;
};

using ActionMask = ActionSet;

inline ActionSet nav_actions() { return ActionSet::range(0, kCollectBase); }
inline ActionSet collect_actions() { return ActionSet::range(kCollectBase, kTriageBase); }
inline ActionSet triage_actions() { return ActionSet::range(kTriageBase, kActionCount); }

inline ActionSet task_actions(TaskId t) {
  switch (t) {
    case TaskId::Navigate: return nav_actions();
    case TaskId::CollectInfo: return collect_actions();
    case TaskId::Triage: return triage_actions();
  }
  return {};
}

}  // namespace lucifer
