#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/core.hpp"
#include "lucifer/env/grid_map.hpp"

namespace lucifer {

enum class InsightCategory { POI, HAZ };
enum class InsightSource { HumanReport, Fixture };

inline std::string_view category_name(InsightCategory c) { return c == InsightCategory::POI ? "POI" : "HAZ"; }

inline std::optional<InsightCategory> parse_category(std::string_view s) {
  std::string up;
  for (char ch : s)
    if (ch != ' ') up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  if (up == "POI") return InsightCategory::POI;
  if (up == "HAZ") return InsightCategory::HAZ;
  return std::nullopt;
}

/// One structured extraction: a named place, its category and where it is.
struct ContextInsight {
  std::string entity;
  InsightCategory category = InsightCategory::POI;
  Coord coordinate{};
  InsightSource source = InsightSource::Fixture;

  friend bool operator==(const ContextInsight&, const ContextInsight&) = default;
};

inline nlohmann::json to_json(const ContextInsight& c) {
  return {{"entity", c.entity},
          {"category", std::string(category_name(c.category))},
          {"coordinate", {c.coordinate.row, c.coordinate.col}},
          {"source", c.source == InsightSource::HumanReport ? "human-report" : "fixture"}};
}

inline ContextInsight insight_from_json(const nlohmann::json& j) {
  ContextInsight c;
  c.entity = j.at("entity").get<std::string>();
  auto cat = parse_category(j.at("category").get<std::string>());
  if (!cat) throw ParseError("unknown insight category " + j.at("category").dump());
  c.category = *cat;
  c.coordinate = {j.at("coordinate").at(0).get<int>(), j.at("coordinate").at(1).get<int>()};
  c.source = j.value("source", std::string("fixture")) == "human-report" ? InsightSource::HumanReport
                                                                         : InsightSource::Fixture;
  return c;
}

/// s_u / s_d / s_o partitions of the map derived from insights.
struct CriticalStateSets {
  std::set<Coord> undesirable;
  std::set<Coord> desirable;
  std::set<Coord> objective;

  bool empty() const { return undesirable.empty() && desirable.empty() && objective.empty(); }
  friend bool operator==(const CriticalStateSets&, const CriticalStateSets&) = default;
};

/// HAZ -> undesirable, POI -> desirable, any insight located on the victim
/// cell -> objective. HAZ wins over POI at a shared coordinate. Duplicates
/// collapse.
inline CriticalStateSets derive_critical_sets(const std::vector<ContextInsight>& insights, const GridMap& map) {
  CriticalStateSets out;
  const Coord victim = map.victim();
  for (const auto& c : insights) {
    if (!map.in_bounds(c.coordinate)) throw ValidationError("insight coordinate out of bounds");
    if (c.coordinate == victim) {
      out.objective.insert(victim);
    } else if (c.category == InsightCategory::HAZ) {
      out.undesirable.insert(c.coordinate);
    }
  }
  for (const auto& c : insights) {
    if (c.coordinate == victim || c.category != InsightCategory::POI) continue;
    if (!out.undesirable.contains(c.coordinate)) out.desirable.insert(c.coordinate);
  }
  return out;
}

}  // namespace lucifer
