#pragma once

// Chat-completion backends shared by the context extractor and the
// exploration facilitator.

#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lucifer/core.hpp"

namespace lucifer {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  /// Stable key for scripted lookup; remote backends ignore it.
  std::string lookup_key;
};

struct ChatResponse {
  std::string content;
  double latency = 0.0;  // seconds
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual std::string name() const = 0;
};

/// Canned responses keyed by ChatRequest::lookup_key. The reported latency is
/// a fixed configured value so scripted runs stay byte-reproducible.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::map<std::string, std::string> table, std::optional<std::string> fallback = {},
                           double latency = 0.0)
      : table_(std::move(table)), default_(std::move(fallback)), latency_(latency) {}

  ChatResponse complete(const ChatRequest& req) override {
    ++calls_;
    if (auto it = table_.find(req.lookup_key); it != table_.end()) return {it->second, latency_};
    if (default_) return {*default_, latency_};
    throw BackendUnavailable("scripted backend has no response for key '" + req.lookup_key + "'");
  }
  std::string name() const override { return label_; }

  void set(const std::string& key, std::string response) { table_[key] = std::move(response); }
  void set_label(std::string l) { label_ = std::move(l); }
  std::size_t calls() const { return calls_; }
  const std::map<std::string, std::string>& table() const { return table_; }

 private:
  std::map<std::string, std::string> table_;
  std::optional<std::string> default_;
  double latency_ = 0.0;
  std::string label_ = "scripted";
  std::size_t calls_ = 0;
};

/// Arbitrary response function; tests use it to simulate slow or broken models.
class CallbackBackend : public Backend {
 public:
  explicit CallbackBackend(std::function<ChatResponse(const ChatRequest&)> fn, std::string label = "callback")
      : fn_(std::move(fn)), label_(std::move(label)) {}
  ChatResponse complete(const ChatRequest& req) override { return fn_(req); }
  std::string name() const override { return label_; }

 private:
  std::function<ChatResponse(const ChatRequest&)> fn_;
  std::string label_;
};

struct RemoteSpec {
  std::string endpoint = "http://127.0.0.1:11434/v1/chat/completions";
  std::string model;
  double timeout_s = 30.0;
  int max_retries = 1;
  double temperature = 0.0;
};

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  if (url.compare(0, scheme_end, "http") != 0) throw ConfigError("only http endpoints are supported: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// OpenAI-style chat completion over plain HTTP, non-streaming.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteSpec spec) : spec_(std::move(spec)), url_(split_url(spec_.endpoint)) {
    if (spec_.timeout_s <= 0) throw ConfigError("remote timeout must be positive");
    if (spec_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  }

  ChatResponse complete(const ChatRequest& req) override {
    nlohmann::json body{{"model", spec_.model}, {"temperature", spec_.temperature}, {"stream", false}};
    body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string payload = body.dump();

    httplib::Client cli(url_.scheme_host_port);
    const auto secs = static_cast<time_t>(spec_.timeout_s);
    const auto usecs = static_cast<time_t>((spec_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    bool timed_out = false;
    std::string last_error;
    for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
      const auto t0 = std::chrono::steady_clock::now();
      auto res = cli.Post(url_.path, payload, "application/json");
      const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!res) {
        timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                    (res.error() == httplib::Error::Read && latency >= spec_.timeout_s * 0.9);
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      try {
        auto j = nlohmann::json::parse(res->body);
        return {j.at("choices").at(0).at("message").at("content").get<std::string>(), latency};
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("malformed completion body: ") + e.what();
      }
    }
    if (timed_out) throw BackendTimeout("remote backend timed out after " + std::to_string(spec_.timeout_s) + "s");
    throw BackendUnavailable("remote backend failed: " + last_error);
  }
  std::string name() const override { return spec_.model.empty() ? "remote" : spec_.model; }

 private:
  RemoteSpec spec_;
  ParsedUrl url_;
};

/// Backend configuration as it appears in run configs:
///   {"kind": "scripted", "table": "path.json" | {...}, "default": "...", "latency": 0.2}
///   {"kind": "remote", "endpoint": "...", "model": "...", "timeout": 30, "max_retries": 1, "temperature": 0}
struct ScriptedSpec {
  std::map<std::string, std::string> table;
  std::optional<std::string> fallback;
  double latency = 0.0;
};

using BackendSpec = std::variant<ScriptedSpec, RemoteSpec>;

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// `base_dir` resolves relative table paths.
inline BackendSpec backend_spec_from_json(const nlohmann::json& j, const std::string& base_dir = "") {
  const std::string kind = j.value("kind", std::string("scripted"));
  if (kind == "scripted") {
    ScriptedSpec s;
    nlohmann::json table = j.value("table", nlohmann::json::object());
    if (table.is_string()) {
      std::string p = table.get<std::string>();
      if (!base_dir.empty() && !p.empty() && p[0] != '/') p = base_dir + "/" + p;
      nlohmann::json file = read_json_file(p);
      if (file.contains("responses")) {
        if (file.contains("default")) s.fallback = file["default"].get<std::string>();
        s.latency = file.value("latency", 0.0);
        table = file["responses"];
      } else {
        table = file;
      }
    }
    for (auto& [k, v] : table.items()) s.table[k] = v.is_string() ? v.get<std::string>() : v.dump();
    if (j.contains("default")) s.fallback = j["default"].get<std::string>();
    if (j.contains("latency")) s.latency = j["latency"].get<double>();
    return s;
  }
  if (kind == "remote") {
    RemoteSpec r;
    r.endpoint = j.value("endpoint", r.endpoint);
    r.model = j.value("model", r.model);
    r.timeout_s = j.value("timeout", r.timeout_s);
    r.max_retries = j.value("max_retries", r.max_retries);
    r.temperature = j.value("temperature", r.temperature);
    if (r.timeout_s <= 0) throw ConfigError("remote timeout must be positive");
    return r;
  }
  throw ConfigError("unknown backend kind " + kind);
}

inline std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (const auto* s = std::get_if<ScriptedSpec>(&spec))
    return std::make_unique<ScriptedBackend>(s->table, s->fallback, s->latency);
  return std::make_unique<RemoteBackend>(std::get<RemoteSpec>(spec));
}

}  // namespace lucifer
