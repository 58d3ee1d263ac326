#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lucifer/env/gridworld.hpp"

namespace lucifer {

enum class Worker : std::uint8_t { Flat, Navigate, CollectInfo, Triage };

inline Worker worker_for(TaskId t) {
  switch (t) {
    case TaskId::Navigate: return Worker::Navigate;
    case TaskId::CollectInfo: return Worker::CollectInfo;
    case TaskId::Triage: return Worker::Triage;
  }
  return Worker::Flat;
}

inline const char* worker_name(Worker w) {
  switch (w) {
    case Worker::Flat: return "flat";
    case Worker::Navigate: return "navigate";
    case Worker::CollectInfo: return "collect";
    case Worker::Triage: return "triage";
  }
  return "?";
}

/// Bijections from worker-specific state tuples to dense row indices:
///   navigate: (position, target index)
///   collect:  (position, collected mask)
///   triage:   (position)
///   flat:     (position, number of info types collected)
/// The collected mask is compressed to the info types the map actually offers.
class StateIndexer {
 public:
  StateIndexer() = default;
  explicit StateIndexer(const GridMap& map)
      : width_(map.width()), cells_(static_cast<std::size_t>(map.cell_count())),
        targets_(map.collection_points().size() + 1) {
    type_bit_.assign(kInfoTypeCount, -1);
    for (int t : map.info_types()) type_bit_[static_cast<std::size_t>(t)] = bits_++;
    if (bits_ > 16) throw ConfigError("maps with more than 16 distinct info types are not indexable");
  }

  std::size_t navigate_states() const { return cells_ * targets_; }
  std::size_t collect_states() const { return cells_ << bits_; }
  std::size_t triage_states() const { return cells_; }
  std::size_t flat_states() const { return cells_ * static_cast<std::size_t>(bits_ + 1); }

  std::size_t states(Worker w) const {
    switch (w) {
      case Worker::Navigate: return navigate_states();
      case Worker::CollectInfo: return collect_states();
      case Worker::Triage: return triage_states();
      case Worker::Flat: return flat_states();
    }
    return 0;
  }

  std::size_t cell(Coord c) const { return static_cast<std::size_t>(c.row * width_ + c.col); }

  std::uint32_t mask_code(const InfoMask& m) const {
    std::uint32_t code = 0;
    for (std::size_t t = 0; t < kInfoTypeCount; ++t)
      if (m.test(t) && type_bit_[t] >= 0) code |= 1u << type_bit_[t];
    return code;
  }

  std::size_t navigate(Coord pos, std::size_t target_index) const { return target_index * cells_ + cell(pos); }
  std::size_t collect(const EnvState& s) const { return (cell(s.position) << bits_) | mask_code(s.collected); }
  std::size_t triage(Coord pos) const { return cell(pos); }
  std::size_t flat(const EnvState& s) const {
    return cell(s.position) * static_cast<std::size_t>(bits_ + 1) + static_cast<std::size_t>(std::popcount(mask_code(s.collected)));
  }

  std::size_t index(Worker w, const EnvState& s, std::size_t target_index) const {
    switch (w) {
      case Worker::Navigate: return navigate(s.position, target_index);
      case Worker::CollectInfo: return collect(s);
      case Worker::Triage: return triage(s.position);
      case Worker::Flat: return flat(s);
    }
    return 0;
  }

  Coord position_of(Worker w, std::size_t s) const {
    std::size_t c = 0;
    switch (w) {
      case Worker::Navigate: c = s % cells_; break;
      case Worker::Triage: c = s; break;
      case Worker::CollectInfo: c = s >> bits_; break;
      case Worker::Flat: c = s / static_cast<std::size_t>(bits_ + 1); break;
    }
    return {static_cast<int>(c) / width_, static_cast<int>(c) % width_};
  }

  std::size_t target_of_navigate(std::size_t s) const { return s / cells_; }

  std::string key(Worker w, std::size_t s) const {
    const Coord p = position_of(w, s);
    std::string k = std::string(worker_name(w)) + ":" + std::to_string(p.row) + "," + std::to_string(p.col);
    switch (w) {
      case Worker::Navigate: return k + ":t" + std::to_string(target_of_navigate(s));
      case Worker::CollectInfo: return k + ":m" + std::to_string(s & ((std::size_t{1} << bits_) - 1));
      case Worker::Flat: return k + ":n" + std::to_string(s % static_cast<std::size_t>(bits_ + 1));
      case Worker::Triage: return k;
    }
    return k;
  }

  int mask_bits() const { return bits_; }

 private:
  int width_ = 0;
  std::size_t cells_ = 0;
  std::size_t targets_ = 0;
  int bits_ = 0;
  std::vector<int> type_bit_;
};

}  // namespace lucifer
