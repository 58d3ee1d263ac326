#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/core.hpp"
#include "lucifer/env/grid_map.hpp"

namespace lucifer {

struct KbEntry {
  std::string name;
  std::vector<std::string> aliases;
  Coord coordinate{};
  std::string description;

  friend bool operator==(const KbEntry&, const KbEntry&) = default;
};

/// Case-folds, maps punctuation to spaces and splits on whitespace.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Lower-cased, punctuation-free, single-spaced form used for name matching.
inline std::string normalize_name(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

inline bool is_stopword(const std::string& t) {
  static const std::set<std::string> kStop = {"a",    "an",   "and",  "at",   "by",   "for", "from", "in",
                                              "is",   "it",   "near", "of",   "on",   "or",  "the",  "to",
                                              "with", "there", "we",  "our",  "are",  "was", "be",   "this",
                                              "that", "has",  "have", "been", "its",  "into", "over"};
  return kStop.contains(t);
}

class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<KbEntry> entries) : entries_(std::move(entries)) { build(); }

  const std::vector<KbEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Resolves a surface form against canonical names and aliases.
  const KbEntry* resolve(std::string_view surface) const {
    auto it = by_name_.find(normalize_name(surface));
    return it == by_name_.end() ? nullptr : &entries_[it->second];
  }

  const KbEntry* find(const std::string& canonical) const {
    for (const auto& e : entries_)
      if (e.name == canonical) return &e;
    return nullptr;
  }

  void validate(const GridMap& map) const {
    for (const auto& e : entries_)
      if (!map.in_bounds(e.coordinate)) throw ValidationError("knowledge base entry " + e.name + " is out of bounds");
  }

 private:
  void build() {
    std::set<std::string> names;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!names.insert(normalize_name(entries_[i].name)).second)
        throw ValidationError("duplicate knowledge base name " + entries_[i].name);
    }
    // Canonical names take precedence over aliases of other entries.
    for (std::size_t i = 0; i < entries_.size(); ++i) by_name_[normalize_name(entries_[i].name)] = i;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      for (const auto& a : entries_[i].aliases) by_name_.emplace(normalize_name(a), i);
  }

  std::vector<KbEntry> entries_;
  std::map<std::string, std::size_t> by_name_;
};

inline KnowledgeBase kb_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("knowledge base must be a JSON array");
  std::vector<KbEntry> entries;
  for (const auto& e : j) {
    KbEntry k;
    k.name = e.at("name").get<std::string>();
    k.aliases = e.value("aliases", std::vector<std::string>{});
    k.coordinate = {e.at("coordinate").at(0).get<int>(), e.at("coordinate").at(1).get<int>()};
    k.description = e.value("description", std::string());
    entries.push_back(std::move(k));
  }
  return KnowledgeBase(std::move(entries));
}

inline nlohmann::json to_json(const KbEntry& e) {
  return {{"name", e.name},
          {"aliases", e.aliases},
          {"coordinate", {e.coordinate.row, e.coordinate.col}},
          {"description", e.description}};
}

struct Retrieved {
  const KbEntry* entry = nullptr;
  double score = 0.0;
};

struct RetrievalWeights {
  double name = 3.0;
  double alias = 2.0;
  double description = 1.0;
};

/// Top-k entries by weighted token overlap. Each distinct non-stopword query
/// token contributes the weight of the strongest field it appears in.
inline std::vector<Retrieved> retrieve(const KnowledgeBase& kb, std::string_view query, std::size_t k,
                                       const RetrievalWeights& w = {}) {
  if (k == 0) throw ConfigError("retrieve needs k >= 1");
  std::set<std::string> q;
  for (auto& t : tokenize(query))
    if (!is_stopword(t)) q.insert(std::move(t));

  std::vector<Retrieved> scored;
  scored.reserve(kb.entries().size());
  for (const auto& e : kb.entries()) {
    const auto name_toks = tokenize(e.name);
    std::set<std::string> name_set(name_toks.begin(), name_toks.end());
    std::set<std::string> alias_set;
    for (const auto& a : e.aliases)
      for (auto& t : tokenize(a)) alias_set.insert(std::move(t));
    const auto desc_toks = tokenize(e.description);
    std::set<std::string> desc_set(desc_toks.begin(), desc_toks.end());

    double s = 0.0;
    for (const auto& t : q) {
      if (name_set.contains(t)) s += w.name;
      else if (alias_set.contains(t)) s += w.alias;
      else if (desc_set.contains(t)) s += w.description;
    }
    scored.push_back({&e, s});
  }
  std::sort(scored.begin(), scored.end(), [](const Retrieved& a, const Retrieved& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entry->name < b.entry->name;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace lucifer
