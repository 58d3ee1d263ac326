#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "lucifer/core.hpp"

namespace lucifer {

/// A text template with `{{name}}` placeholders.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string name, std::string text) : name_(std::move(name)), text_(std::move(text)) {}

  static PromptTemplate load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open prompt template " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto slash = path.find_last_of('/');
    return {slash == std::string::npos ? path : path.substr(slash + 1), ss.str()};
  }

  /// Every placeholder must be bound; unused bindings are ignored.
  std::string render(const std::map<std::string, std::string>& vars) const {
    std::string out;
    out.reserve(text_.size());
    std::size_t i = 0;
    while (i < text_.size()) {
      const auto open = text_.find("{{", i);
      if (open == std::string::npos) {
        out.append(text_, i, std::string::npos);
        break;
      }
      const auto close = text_.find("}}", open + 2);
      if (close == std::string::npos) throw ConfigError(name_ + ": unterminated placeholder");
      out.append(text_, i, open - i);
      const std::string key = text_.substr(open + 2, close - open - 2);
      auto it = vars.find(key);
      if (it == vars.end()) throw ConfigError(name_ + ": unbound placeholder " + key);
      out += it->second;
      i = close + 2;
    }
    return out;
  }

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }

 private:
  std::string name_;
  std::string text_;
};

}  // namespace lucifer
