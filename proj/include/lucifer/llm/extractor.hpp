#pragma once

// Turns a free-text report into spatial insights: retrieve candidate places
// from the knowledge base, prompt the model for a JSON array of
// {location, category}, then resolve each location back to a coordinate.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/attention/insight.hpp"
#include "lucifer/hierarchy/tasks.hpp"
#include "lucifer/llm/backend.hpp"
#include "lucifer/llm/knowledge_base.hpp"
#include "lucifer/llm/prompt.hpp"

namespace lucifer {

enum class Complexity { Simple, Complex };

struct VerbalInput {
  std::string id;
  std::string text;
  Complexity complexity = Complexity::Simple;
};

enum class ParseStatus { Clean, Repaired, Failed };

inline const char* parse_status_name(ParseStatus p) {
  switch (p) {
    case ParseStatus::Clean: return "clean";
    case ParseStatus::Repaired: return "repaired";
    case ParseStatus::Failed: return "failed";
  }
  return "?";
}

enum class EntityOutcome { Insight, Hallucination, Malformed };

/// One element of the model's array, whatever became of it.
struct EmittedEntity {
  std::string location;
  std::string category;
  EntityOutcome outcome = EntityOutcome::Malformed;
};

struct ExtractionResult {
  std::vector<ContextInsight> insights;
  std::vector<std::string> hallucinations;
  std::vector<EmittedEntity> emitted;
  std::string raw_response;
  double latency = 0.0;
  ParseStatus parse_status = ParseStatus::Clean;
};

/// First bracket-balanced top-level array in `text`, skipping string contents.
inline std::optional<std::string> first_balanced_array(const std::string& text) {
  const auto start = text.find('[');
  if (start == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[') ++depth;
    else if (c == ']' && --depth == 0) return text.substr(start, i - start + 1);
  }
  return std::nullopt;
}

/// Parses the model output as a JSON array, with one repair attempt.
inline std::optional<nlohmann::json> parse_extraction_array(const std::string& raw, ParseStatus& status) {
  auto as_array = [](const std::string& s) -> std::optional<nlohmann::json> {
    auto j = nlohmann::json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_array()) return std::nullopt;
    return j;
  };
  if (auto j = as_array(raw)) {
    status = ParseStatus::Clean;
    return j;
  }
  if (auto sub = first_balanced_array(raw)) {
    if (auto j = as_array(*sub)) {
      status = ParseStatus::Repaired;
      return j;
    }
  }
  status = ParseStatus::Failed;
  return std::nullopt;
}

inline std::string schema_instruction() {
  return "Respond with only a JSON array. Each element must be an object "
         "{\"location\": <place name from the knowledge base>, \"category\": <one of the categories>}. "
         "Return [] if the report names no place.";
}

inline std::string lookup_key_for(const VerbalInput& v) { return v.id.empty() ? normalize_name(v.text) : v.id; }

inline std::string render_extraction_prompt(const VerbalInput& v, const KnowledgeBase& kb,
                                            const InformationSpace& ispace, const PromptTemplate& tmpl,
                                            std::size_t top_k) {
  std::ostringstream cats;
  for (const auto& c : ispace.extraction_categories) {
    cats << "- " << c << ": "
         << (c == "HAZ" ? "a place that is dangerous or should be avoided"
                        : c == "POI" ? "a place of interest that helps the mission" : "see mission briefing")
         << '\n';
  }
  std::ostringstream entries;
  if (!kb.empty()) {
    for (const auto& r : retrieve(kb, v.text, top_k)) {
      entries << "- " << r.entry->name;
      if (!r.entry->aliases.empty()) {
        entries << " (also:";
        for (const auto& a : r.entry->aliases) entries << ' ' << a << ';';
        entries << ')';
      }
      entries << ": " << r.entry->description << '\n';
    }
  }
  return tmpl.render({{"categories", cats.str()},
                      {"kb_entries", entries.str()},
                      {"report", v.text},
                      {"schema", schema_instruction()}});
}

/// Runs the extractor end to end. BackendTimeout/BackendUnavailable propagate.
inline ExtractionResult extract_context(const VerbalInput& v, const KnowledgeBase& kb,
                                        const InformationSpace& ispace, Backend& backend,
                                        const PromptTemplate& tmpl, std::size_t top_k = 5) {
  if (v.text.empty()) throw ValidationError("verbal input text is empty");
  ChatRequest req;
  req.messages = {{"system", "You extract locations from search-and-rescue reports."},
                  {"user", render_extraction_prompt(v, kb, ispace, tmpl, top_k)}};
  req.lookup_key = lookup_key_for(v);
  const ChatResponse resp = backend.complete(req);

  ExtractionResult out;
  out.raw_response = resp.content;
  out.latency = resp.latency;
  auto arr = parse_extraction_array(resp.content, out.parse_status);
  if (!arr) return out;

  for (const auto& el : *arr) {
    EmittedEntity e;
    if (el.is_object()) {
      if (el.contains("location") && el["location"].is_string()) e.location = el["location"].get<std::string>();
      if (el.contains("category") && el["category"].is_string()) e.category = el["category"].get<std::string>();
    }
    const auto cat = parse_category(e.category);
    bool allowed = false;
    for (const auto& c : ispace.extraction_categories) allowed |= cat && c == category_name(*cat);
    if (e.location.empty() || !cat || !allowed) {
      e.outcome = EntityOutcome::Malformed;
    } else if (const KbEntry* hit = kb.resolve(e.location)) {
      e.outcome = EntityOutcome::Insight;
      out.insights.push_back({hit->name, *cat, hit->coordinate, InsightSource::HumanReport});
    } else {
      e.outcome = EntityOutcome::Hallucination;
      out.hallucinations.push_back(e.location);
    }
    out.emitted.push_back(std::move(e));
  }
  return out;
}

}  // namespace lucifer
