#pragma once

#include <istream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lucifer/core.hpp"
#include "lucifer/env/actions.hpp"

namespace lucifer {

namespace detail {
inline std::string coord_text(const nlohmann::json& c) {
  return "(" + std::to_string(c.at(0).get<int>()) + "," + std::to_string(c.at(1).get<int>()) + ")";
}
}  // namespace detail

/// Renders a JSON-lines episode log as one line per record. `episode`
/// restricts the output to a single episode.
inline std::string render_trace(std::istream& in, std::optional<std::size_t> episode = std::nullopt) {
  std::ostringstream os;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      const auto ep = j.at("episode").get<std::size_t>();
      if (episode && *episode != ep) continue;
      if (type == "step") {
        os << "ep " << ep << " step " << j.at("step").get<std::size_t>() << "  " << j.at("task").get<std::string>();
        if (j.contains("target")) os << "->" << detail::coord_text(j["target"]);
        os << "  at " << detail::coord_text(j.at("state").at("pos")) << "  "
           << action_token(j.at("action").get<std::size_t>()) << " [" << j.at("source").get<std::string>() << "]"
           << "  r=" << j.at("reward").get<double>();
        if (j.contains("shaped_reward")) os << " shaped=" << j["shaped_reward"].get<double>();
        const auto& ev = j.at("events");
        if (!ev.empty()) {
          os << "  {";
          for (std::size_t i = 0; i < ev.size(); ++i) os << (i ? "," : "") << ev[i].get<std::string>();
          os << "}";
        }
        if (j.contains("mask")) os << "  mask=" << j["mask"].dump();
        if (j.contains("warning")) os << "  !" << j["warning"].get<std::string>();
        os << '\n';
      } else if (type == "overlay") {
        os << "ep " << ep << " step " << j.at("step").get<std::size_t>() << "  overlay "
           << j.at("state_key").get<std::string>() << " " << action_token(j.at("action").get<std::size_t>()) << " "
           << j.at("old").get<double>() << " -> " << j.at("new").get<double>() << '\n';
      } else if (type == "episode_end") {
        os << "ep " << ep << " end  steps=" << j.at("steps").get<std::size_t>()
           << " mission=" << (j.at("mission_complete").get<bool>() ? "yes" : "no")
           << " collected=" << (j.at("fully_collected").get<bool>() ? "yes" : "no")
           << " hazards=" << j.at("hazard_hits").get<std::size_t>() << " return=" << j.at("return").get<double>()
           << (j.at("truncated").get<bool>() ? " (truncated)" : "") << '\n';
      } else {
        throw ParseError("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return os.str();
}

}  // namespace lucifer
