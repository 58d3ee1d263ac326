#pragma once

// Directional checks over a finished benchmark matrix. Each check names the
// reports it needs and is skipped when they were not produced.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lucifer/eval/metrics.hpp"

namespace lucifer {

enum class CheckStatus { Pass, Fail, Skipped };

inline const char* check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Skipped: return "SKIP";
  }
  return "SKIP";
}

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Skipped;
  std::string detail;
};

struct CheckThresholds {
  double random_psr_low = 2.5;
  double random_psr_high = 5.0;
  std::size_t random_psr_min_attempts = 10000;
  double sparse_flat_msr_max = 1.0;
  double hierarchy_gap = 30.0;
  double synergy_gap = 10.0;
  double facilitator_psr_min = 95.0;
};

inline const MetricsReport* find_report(const std::vector<MetricsReport>& rs, const std::string& variant,
                                        const std::string& setting) {
  for (const auto& r : rs)
    if (r.variant == variant && r.setting == setting) return &r;
  return nullptr;
}

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}
inline CheckResult verdict(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)};
}
}  // namespace detail

/// Pooled random-exploration PSR over every non-LLM report.
inline CheckResult check_random_psr(const std::vector<MetricsReport>& rs, const CheckThresholds& t = {}) {
  std::size_t attempts = 0, correct = 0;
  for (const auto& r : rs)
    if (r.variant.find("LLM") == std::string::npos) {
      attempts += r.psr_attempts;
      correct += r.psr_correct;
    }
  if (attempts == 0) return {"random_psr_band", CheckStatus::Skipped, "no random collection attempts"};
  const double psr = 100.0 * static_cast<double>(correct) / static_cast<double>(attempts);
  const bool ok = attempts >= t.random_psr_min_attempts && psr >= t.random_psr_low && psr <= t.random_psr_high;
  return detail::verdict("random_psr_band", ok,
                         "PSR " + detail::fmt(psr) + "% over " + std::to_string(attempts) + " attempts");
}

inline CheckResult check_sparse_flat(const std::vector<MetricsReport>& rs, const CheckThresholds& t = {}) {
  std::string detail;
  bool any = false, ok = true;
  for (const char* v : {"Q", "Q-PS", "Q-RS", "Q-AS"}) {
    const auto* r = find_report(rs, v, "3-info sparse");
    if (!r) continue;
    any = true;
    ok = ok && r->msr.mean < t.sparse_flat_msr_max;
    detail += std::string(detail.empty() ? "" : ", ") + v + " MSR " + detail::fmt(r->msr.mean);
  }
  if (!any) return {"sparse_flat_failure", CheckStatus::Skipped, "no 3-info sparse flat reports"};
  return detail::verdict("sparse_flat_failure", ok, detail);
}

inline CheckResult check_hierarchy_dominance(const std::vector<MetricsReport>& rs, const CheckThresholds& t = {}) {
  const auto* h = find_report(rs, "HierQ", "3-info non-sparse");
  const auto* q = find_report(rs, "Q", "3-info non-sparse");
  if (!h || !q) return {"hierarchy_dominance", CheckStatus::Skipped, "needs HierQ and Q on 3-info non-sparse"};
  const double gap = h->msr.mean - q->msr.mean;
  return detail::verdict("hierarchy_dominance", gap >= t.hierarchy_gap,
                         "HierQ " + detail::fmt(h->msr.mean) + " - Q " + detail::fmt(q->msr.mean) + " = " +
                             detail::fmt(gap) + " (need >= " + detail::fmt(t.hierarchy_gap) + ")");
}

inline CheckResult check_synergy(const std::vector<MetricsReport>& rs, const CheckThresholds& t = {}) {
  const auto* s = find_report(rs, "HierQ-LLM-PS", "3-info non-sparse");
  const auto* h = find_report(rs, "HierQ", "3-info non-sparse");
  if (!s || !h) return {"shaping_llm_synergy", CheckStatus::Skipped, "needs HierQ-LLM-PS and HierQ on 3-info non-sparse"};
  const double gap = s->msr.mean - h->msr.mean;
  const double psr = s->pooled_psr();
  return detail::verdict("shaping_llm_synergy", gap >= t.synergy_gap && psr >= t.facilitator_psr_min,
                         "MSR gap " + detail::fmt(gap) + " (need >= " + detail::fmt(t.synergy_gap) + "), PSR " +
                             detail::fmt(psr) + " (need >= " + detail::fmt(t.facilitator_psr_min) + ")");
}

inline CheckResult check_safety_coupling(const std::vector<MetricsReport>& rs, const std::string& variant,
                                         const std::string& setting = "3-info non-sparse") {
  const auto* r = find_report(rs, variant, setting);
  const std::string name = "safety_coupling " + variant;
  if (!r) return {name, CheckStatus::Skipped, "no " + variant + " report on " + setting};
  return detail::verdict(name, r->mswc.mean == r->msr.mean,
                         "MSWC " + detail::fmt(r->mswc.mean) + " vs MSR " + detail::fmt(r->msr.mean));
}

inline CheckResult check_ordering(const std::vector<MetricsReport>& rs) {
  if (rs.empty()) return {"metric_ordering", CheckStatus::Skipped, "no reports"};
  std::string bad;
  for (const auto& r : rs)
    if (!r.ordering_holds()) bad += (bad.empty() ? "" : ", ") + r.variant + " (" + r.setting + ")";
  return detail::verdict("metric_ordering", bad.empty(),
                         bad.empty() ? std::to_string(rs.size()) + " reports" : "violated by " + bad);
}

inline std::vector<CheckResult> directional_checks(const std::vector<MetricsReport>& rs,
                                                   const CheckThresholds& t = {}) {
  return {check_random_psr(rs, t),          check_sparse_flat(rs, t),
          check_hierarchy_dominance(rs, t), check_synergy(rs, t),
          check_safety_coupling(rs, "HierQ-PS"), check_safety_coupling(rs, "HierQ-AS"),
          check_ordering(rs)};
}

}  // namespace lucifer
