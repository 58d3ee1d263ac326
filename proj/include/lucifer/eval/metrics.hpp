#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lucifer/hierarchy/episode.hpp"

namespace lucifer {

struct TrialMetrics {
  double msr = 0.0;
  double icsr = 0.0;
  double psr = 0.0;
  double mswc = 0.0;
  double ar = 0.0;
  bool psr_defined = false;
  std::size_t psr_attempts = 0;
  std::size_t psr_correct = 0;
  std::size_t episodes = 0;
};

/// Percentages over one trial's episodes. PSR counts facilitator-chosen
/// collection attempts when `facilitator_psr`, random ones otherwise; with no
/// attempts it is 0 and flagged undefined.
inline TrialMetrics compute_metrics(std::span<const EpisodeSummary> episodes, bool facilitator_psr) {
  TrialMetrics m;
  m.episodes = episodes.size();
  if (episodes.empty()) return m;
  std::size_t complete = 0, collected = 0, clean = 0;
  double total = 0.0;
  for (const auto& e : episodes) {
    complete += e.mission_complete;
    collected += e.fully_collected;
    clean += e.mission_complete && e.hazard_hits == 0;
    total += e.total_reward;
    m.psr_attempts += facilitator_psr ? e.facilitator_collect_attempts : e.random_collect_attempts;
    m.psr_correct += facilitator_psr ? e.facilitator_collect_correct : e.random_collect_correct;
  }
  const double n = static_cast<double>(episodes.size());
  m.msr = 100.0 * static_cast<double>(complete) / n;
  m.icsr = 100.0 * static_cast<double>(collected) / n;
  m.mswc = 100.0 * static_cast<double>(clean) / n;
  m.ar = total / n;
  m.psr_defined = m.psr_attempts > 0;
  m.psr = m.psr_defined ? 100.0 * static_cast<double>(m.psr_correct) / static_cast<double>(m.psr_attempts) : 0.0;
  return m;
}

struct Stat {
  double mean = 0.0;
  double std = 0.0;
  friend bool operator==(const Stat&, const Stat&) = default;
};

/// Mean and sample standard deviation (n-1); std is 0 for a single value.
inline Stat summarize(std::span<const double> xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return s;
}

struct MetricsReport {
  std::string variant;
  std::string setting;
  Stat msr, icsr, psr, mswc, ar;
  bool psr_undefined = false;  // no trial had a collection attempt
  std::size_t psr_attempts = 0;
  std::size_t psr_correct = 0;
  std::size_t trials = 0;

  /// Correct / attempts pooled over all trials.
  double pooled_psr() const {
    return psr_attempts ? 100.0 * static_cast<double>(psr_correct) / static_cast<double>(psr_attempts) : 0.0;
  }
  bool ordering_holds() const { return mswc.mean <= msr.mean + 1e-9 && msr.mean <= icsr.mean + 1e-9; }
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Aggregates per-trial metrics; order-independent up to floating-point
/// summation order. PSR averages only trials where it is defined.
inline MetricsReport aggregate(std::string variant, std::string setting, std::span<const TrialMetrics> trials) {
  MetricsReport r;
  r.variant = std::move(variant);
  r.setting = std::move(setting);
  r.trials = trials.size();
  std::vector<double> msr, icsr, psr, mswc, ar;
  for (const auto& t : trials) {
    msr.push_back(t.msr);
    icsr.push_back(t.icsr);
    mswc.push_back(t.mswc);
    ar.push_back(t.ar);
    if (t.psr_defined) psr.push_back(t.psr);
    r.psr_attempts += t.psr_attempts;
    r.psr_correct += t.psr_correct;
  }
  r.msr = summarize(msr);
  r.icsr = summarize(icsr);
  r.mswc = summarize(mswc);
  r.ar = summarize(ar);
  r.psr = summarize(psr);
  r.psr_undefined = psr.empty();
  return r;
}

}  // namespace lucifer
