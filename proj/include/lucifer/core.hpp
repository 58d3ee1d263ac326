#pragma once

// Shared vocabulary: grid coordinates and the exception hierarchy used by
// every lucifer module.

#include <compare>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace lucifer {

struct Coord {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Coord&, const Coord&) = default;
};

inline int manhattan(Coord a, Coord b) noexcept {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

inline std::string to_string(Coord c) {
  return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

inline std::ostream& operator<<(std::ostream& os, Coord c) { return os << to_string(c); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidStart : public Error {
 public:
  using Error::Error;
};

class EmptyMask : public Error {
 public:
  EmptyMask() : Error("action mask is empty") {}
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class NoReachableTarget : public Error {
 public:
  using Error::Error;
};

class BackendTimeout : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class PersistenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lucifer

template <>
struct std::hash<lucifer::Coord> {
  std::size_t operator()(const lucifer::Coord& c) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(c.row) << 32) ^
                                  static_cast<unsigned>(c.col));
  }
};
