#pragma once

// GridMap and the ASCII map loader.
//
// Map documents start with `key=value` header lines followed by one row of
// glyphs per line:
//
//   info_requirement=3
//   triage_procedure=2      (optional, default 0)
//   @..#......
//   .a.#..H...
//
// Legend: '.' empty, '#' obstacle, 'H' hazard, 'S' safe zone, 'V' victim,
// 'a'..'z' info point requiring that info type, '@' start (empty for dynamics).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lucifer/core.hpp"
#include "lucifer/env/actions.hpp"

namespace lucifer {

enum class CellType : std::uint8_t { Empty, Obstacle, InfoPoint, Hazard, SafeZone, Victim };

struct CellKind {
  CellType type = CellType::Empty;
  int required_info_type = -1;  // only meaningful for InfoPoint

  friend constexpr bool operator==(const CellKind&, const CellKind&) = default;
};

class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, std::vector<CellKind> cells, int info_requirement, Coord start,
          int triage_procedure = 0)
      : width_(width),
        height_(height),
        cells_(std::move(cells)),
        info_requirement_(info_requirement),
        start_(start),
        triage_procedure_(triage_procedure) {
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c) {
        const auto& k = at({r, c});
        if (k.type == CellType::InfoPoint) collection_points_.push_back({r, c});
        if (k.type == CellType::Victim) victims_.push_back({r, c});
      }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int info_requirement() const { return info_requirement_; }
  int triage_procedure() const { return triage_procedure_; }
  Coord start() const { return start_; }
  const std::vector<Coord>& collection_points() const { return collection_points_; }
  Coord victim() const { return victims_.front(); }

  bool in_bounds(Coord c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_;
  }
  const CellKind& at(Coord c) const { return cells_[static_cast<std::size_t>(index_of(c))]; }
  bool passable(Coord c) const { return in_bounds(c) && at(c).type != CellType::Obstacle; }
  int index_of(Coord c) const { return c.row * width_ + c.col; }
  Coord coord_of(int index) const { return {index / width_, index % width_}; }

  /// Deterministic successor of a navigation move: blocked moves stay put.
  Coord successor(Coord from, Direction d) const {
    Coord to = step_toward(from, d);
    return passable(to) ? to : from;
  }

  /// Distinct info types offered by the map's collection points, ascending.
  std::vector<int> info_types() const {
    std::set<int> types;
    for (auto p : collection_points_) types.insert(at(p).required_info_type);
    return {types.begin(), types.end()};
  }

  std::string to_text() const;

 private:
  friend GridMap load_map(std::string_view text);

  int width_ = 0;
  int height_ = 0;
  std::vector<CellKind> cells_;
  int info_requirement_ = 0;
  Coord start_{};
  int triage_procedure_ = 0;
  std::vector<Coord> collection_points_;
  std::vector<Coord> victims_;
};

/// BFS distances over passable cells from `from`; unreachable cells hold -1.
inline std::vector<int> bfs_distances(const GridMap& map, Coord from) {
  std::vector<int> dist(static_cast<std::size_t>(map.cell_count()), -1);
  if (!map.passable(from)) return dist;
  std::queue<Coord> frontier;
  dist[static_cast<std::size_t>(map.index_of(from))] = 0;
  frontier.push(from);
  while (!frontier.empty()) {
    Coord cur = frontier.front();
    frontier.pop();
    for (int d = 0; d < 4; ++d) {
      Coord nxt = step_toward(cur, static_cast<Direction>(d));
      if (!map.passable(nxt)) continue;
      auto& slot = dist[static_cast<std::size_t>(map.index_of(nxt))];
      if (slot >= 0) continue;
      slot = dist[static_cast<std::size_t>(map.index_of(cur))] + 1;
      frontier.push(nxt);
    }
  }
  return dist;
}

inline char glyph_of(const CellKind& k) {
  switch (k.type) {
    case CellType::Empty: return '.';
    case CellType::Obstacle: return '#';
    case CellType::InfoPoint: return static_cast<char>('a' + k.required_info_type);
    case CellType::Hazard: return 'H';
    case CellType::SafeZone: return 'S';
    case CellType::Victim: return 'V';
  }
  return '?';
}

inline std::string GridMap::to_text() const {
  std::ostringstream os;
  os << "info_requirement=" << info_requirement_ << '\n';
  os << "triage_procedure=" << triage_procedure_ << '\n';
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) os << (Coord{r, c} == start_ ? '@' : glyph_of(at({r, c})));
    os << '\n';
  }
  return os.str();
}

inline GridMap load_map(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::string line;
    std::istringstream is{std::string(text)};
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::optional<int> info_requirement;
  int triage_procedure = 0;
  std::size_t row0 = 0;
  for (; row0 < lines.size() && lines[row0].find('=') != std::string::npos; ++row0) {
    const auto& l = lines[row0];
    auto eq = l.find('=');
    std::string key = l.substr(0, eq);
    std::string value = l.substr(eq + 1);
    int parsed = 0;
    try {
      std::size_t used = 0;
      parsed = std::stoi(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError("header '" + key + "' has non-integer value '" + value + "'");
    }
    if (key == "info_requirement") {
      info_requirement = parsed;
    } else if (key == "triage_procedure") {
      if (parsed < 0 || parsed >= static_cast<int>(kTriageCount))
        throw ParseError("triage_procedure out of range: " + value);
      triage_procedure = parsed;
    } else {
      throw ParseError("unknown header key '" + key + "'");
    }
  }
  if (!info_requirement) throw ParseError("missing header line info_requirement=<k>");
  if (*info_requirement < 1 || *info_requirement > static_cast<int>(kInfoTypeCount))
    throw ValidationError("info_requirement out of range");
  if (row0 == lines.size()) throw ParseError("map has no rows");

  const int height = static_cast<int>(lines.size() - row0);
  const int width = static_cast<int>(lines[row0].size());
  if (width == 0) throw ParseError("empty map row");

  GridMap map;
  map.width_ = width;
  map.height_ = height;
  map.info_requirement_ = *info_requirement;
  map.triage_procedure_ = triage_procedure;
  map.cells_.resize(static_cast<std::size_t>(width * height));
  std::optional<Coord> start;

  for (int r = 0; r < height; ++r) {
    const auto& row = lines[row0 + static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != width)
      throw ParseError("ragged row " + std::to_string(r) + ": expected width " + std::to_string(width) +
                       ", got " + std::to_string(row.size()));
    for (int c = 0; c < width; ++c) {
      char g = row[static_cast<std::size_t>(c)];
      CellKind k;
      switch (g) {
        case '.': k.type = CellType::Empty; break;
        case '@':
          if (start) throw ValidationError("multiple start cells");
          start = Coord{r, c};
          k.type = CellType::Empty;
          break;
        case '#': k.type = CellType::Obstacle; break;
        case 'H': k.type = CellType::Hazard; break;
        case 'S': k.type = CellType::SafeZone; break;
        case 'V': k.type = CellType::Victim; break;
        default:
          if (g >= 'a' && g <= 'z') {
            k.type = CellType::InfoPoint;
            k.required_info_type = g - 'a';
          } else {
            throw ParseError(std::string("unknown glyph '") + g + "' at " + to_string(Coord{r, c}));
          }
      }
      map.cells_[static_cast<std::size_t>(r * width + c)] = k;
      if (k.type == CellType::InfoPoint) map.collection_points_.push_back({r, c});
      if (k.type == CellType::Victim) map.victims_.push_back({r, c});
    }
  }

  if (!start) {
    for (int i = 0; i < map.cell_count() && !start; ++i)
      if (map.cells_[static_cast<std::size_t>(i)].type != CellType::Obstacle) start = map.coord_of(i);
    if (!start) throw ValidationError("map has no passable cell");
  }
  map.start_ = *start;

  if (map.victims_.empty()) throw ValidationError("map has no victim cell");
  if (map.victims_.size() > 1) throw ValidationError("map has multiple victim cells");
  if (static_cast<int>(map.collection_points_.size()) < map.info_requirement_)
    throw ValidationError("fewer info points than info_requirement");
  if (static_cast<int>(map.info_types().size()) < map.info_requirement_)
    throw ValidationError("fewer distinct info types than info_requirement");

  auto dist = bfs_distances(map, map.start_);
  if (dist[static_cast<std::size_t>(map.index_of(map.victim()))] < 0)
    throw ValidationError("victim unreachable from start " + to_string(map.start_));
  return map;
}

inline GridMap load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open map file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_map(ss.str());
}

}  // namespace lucifer
