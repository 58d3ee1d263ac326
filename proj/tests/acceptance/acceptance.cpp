// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "lucifer/attention/shaping.hpp"
#include "lucifer/eval/checks.hpp"
#include "lucifer/eval/extractor_bench.hpp"
#include "lucifer/eval/report.hpp"
#include "lucifer/eval/trial.hpp"
#include "lucifer/learning/q_learning.hpp"
#include "lucifer/learning/value_iteration.hpp"

using namespace lucifer;

namespace {

std::string fixture(const std::string& rel) { return std::string(LUCIFER_FIXTURE_DIR) + "/" + rel; }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::vector<MetricsReport> g_reports;  // everything produced by criteria 4-7

MetricsReport run_and_keep(const RunConfig& cfg, const std::string& variant, const TrialFixtures& fx) {
  auto r = run_variant(cfg, *parse_variant(variant), fx, nullptr, 0);
  std::printf("      %-14s %-20s MSR %s  ICSR %s  PSR %s (%zu/%zu)  MSWC %s  AR %s\n", r.variant.c_str(),
              r.setting.c_str(), format_stat(r.msr).c_str(), format_stat(r.icsr).c_str(),
              r.psr_undefined ? "n/a" : format_stat(r.psr).c_str(), r.psr_correct, r.psr_attempts,
              format_stat(r.mswc).c_str(), format_stat(r.ar).c_str());
  std::fflush(stdout);
  g_reports.push_back(r);
  return r;
}

Outcome from_check(const CheckResult& c) { return {c.status == CheckStatus::Pass, c.detail}; }

// 1. Value-iteration greedy sets are unchanged by potential-based shaping.
Outcome pbrs_invariance() {
  std::size_t states = 0, mismatches = 0;
  for (const char* path : {"maps/small5.map", "maps/sar3.map"}) {
    const auto m = load_map_file(fixture(path));
    std::vector<ContextInsight> ins;
    for (int i = 0; i < m.cell_count(); ++i)
      if (m.at(m.coord_of(i)).type == CellType::Hazard)
        ins.push_back({"h" + std::to_string(i), InsightCategory::HAZ, m.coord_of(i), InsightSource::Fixture});
    for (auto p : m.collection_points()) ins.push_back({"p", InsightCategory::POI, p, InsightSource::Fixture});
    const auto crit = derive_critical_sets(ins, m);
    std::vector<Coord> goals = m.collection_points();
    goals.push_back(m.victim());
    const auto base = env_nav_reward(m, RewardConfig::non_sparse());
    for (auto mode : {ReferenceMode::AvoidUndesirable, ReferenceMode::SeekDesirable}) {
      ShapingConfig cfg;
      cfg.reference_mode = mode;
      cfg.beta_u = cfg.beta_d = cfg.beta_o = 0;
      NavRewardFn shaped = [&](Coord from, Direction d, Coord to, bool terminal) {
        return shape_reward(base(from, d, to, terminal), from, to, crit, cfg, 0.99, terminal);
      };
      for (auto goal : goals) {
        const auto r0 = value_iteration_oracle(m, goal, base, nullptr, 0.99, 1e-11);
        const auto r1 = value_iteration_oracle(m, goal, shaped, nullptr, 0.99, 1e-11);
        for (int i = 0; i < m.cell_count(); ++i) {
          const Coord c = m.coord_of(i);
          if (!m.passable(c) || c == goal) continue;
          ++states;
          const auto s = static_cast<std::size_t>(i);
          if (r0.argmax_set(s, 1e-7) != r1.argmax_set(s, 1e-7)) ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " argmax-set mismatches over " + std::to_string(states) + " (state, goal, mode)"};
}

// 2. Masked targets never read a pruned action; full-mask targets are bit-exact.
Outcome masked_max_fuzz() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> val(-50, 50);
  std::uniform_int_distribution<std::size_t> st(0, 15), act(0, kActionCount - 1);
  std::bernoulli_distribution keep(0.3), full(0.2);
  const LearningParams p;
  QTable q(16, ActionSet::all());
  for (std::size_t s = 0; s < 16; ++s)
    for (std::size_t a = 0; a < kActionCount; ++a) q.set(s, a, val(rng));
  std::size_t leaks = 0, inexact = 0, full_count = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const bool is_full = full(rng);
    ActionSet mask = is_full ? ActionSet::all() : ActionSet{};
    if (!is_full) {
      for (std::size_t a = 0; a < kActionCount; ++a)
        if (keep(rng)) mask.insert(a);
      if (mask.empty()) mask.insert(act(rng));
    }
    const auto s = st(rng), a = act(rng);
    const auto s2 = (s + 1 + st(rng) % 15) % 16;  // distinct rows keep the poison out of Q(s, a)
    const double r = val(rng);
    // Poison pruned entries of the successor row so any leak would dominate.
    std::vector<double> saved(kActionCount);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < kActionCount; ++b) {
      saved[b] = q.get(s2, b);
      if (mask.contains(b)) best = std::max(best, saved[b]);
      else q.set(s2, b, 1e9);
    }
    const double old = q.get(s, a);
    const double expect = old + p.alpha * (r + p.gamma * best - old);
    const double got = td_update(q, s, a, r, s2, mask, p);
    if (got > 1e6 || std::abs(got - expect) > 1e-9 * std::max(1.0, std::abs(expect))) ++leaks;
    if (is_full) {
      ++full_count;
      if (got != expect) ++inexact;
    }
    for (std::size_t b = 0; b < kActionCount; ++b) q.set(s2, b, saved[b]);
  }
  return {leaks == 0 && inexact == 0, std::to_string(n) + " updates, " + std::to_string(leaks) +
                                          " pruned-value leaks, " + std::to_string(inexact) + " of " +
                                          std::to_string(full_count) + " full-mask targets not bit-exact"};
}

// 8. Scorer against hand-computed values on six extractor outputs.
Outcome scorer_oracle() {
  const auto kb = kb_from_json(read_json_file(fixture("kb/sar3_kb.json")));
  const auto tmpl = PromptTemplate::load(fixture("prompts/extractor_v1.txt"));
  const auto ispace = InformationSpace::sar(3);
  using IC = InsightCategory;
  struct Case {
    std::string name;
    Complexity complexity;
    std::string response;
    std::vector<GoldLocation> gold;
    CaseScore expect;
  };
  const std::vector<Case> cases = {
      {"perfect", Complexity::Simple, R"([{"location": "North Bridge", "category": "HAZ"}])",
       {{"North Bridge", IC::HAZ}}, {2, 2, 100.0, 0, 0, 0, true}},
      {"partial", Complexity::Simple, R"([{"location": "North Bridge", "category": "HAZ"}])",
       {{"North Bridge", IC::HAZ}, {"Old Library", IC::POI}}, {2, 4, 50.0, 1, 0, 0, false}},
      {"miscategorized", Complexity::Simple, R"([{"location": "Gas Works", "category": "POI"}])",
       {{"Gas Works", IC::HAZ}}, {1, 2, 50.0, 0, 1, 0, false}},
      {"hallucinated", Complexity::Simple,
       R"([{"location": "Old Library", "category": "POI"}, {"location": "Ghost Plaza", "category": "HAZ"}])",
       {{"Old Library", IC::POI}}, {2, 2, 100.0, 0, 0, 1, false}},
      {"empty", Complexity::Simple, "[]", {{"North Bridge", IC::HAZ}}, {0, 2, 0.0, 1, 0, 0, false}},
      {"complex", Complexity::Complex,
       R"(Found: [{"location": "northern bridge", "category": "HAZ"}, {"location": "St. Mary's", "category": "HAZ"}])",
       {{"North Bridge", IC::HAZ}, {"East Underpass", IC::HAZ}, {"St Marys School", IC::POI}},
       {3, 6, 50.0, 1, 1, 0, false}},
  };
  std::string bad;
  for (const auto& c : cases) {
    ScriptedBackend backend(std::map<std::string, std::string>{{c.name, c.response}});
    ExtractorBenchCase gold{{c.name, "report for " + c.name, c.complexity}, c.gold};
    const auto res = extract_context(gold.input, kb, ispace, backend, tmpl);
    if (!(score_extraction(res, gold, kb) == c.expect)) bad += (bad.empty() ? "" : ", ") + c.name;
  }
  return {bad.empty(), bad.empty() ? "6/6 cases match" : "mismatch: " + bad};
}

std::string run_log(const RunConfig& cfg, const std::string& variant, const TrialFixtures& fx) {
  std::ostringstream os;
  JsonLinesSink sink(os);
  run_trial(cfg, *parse_variant(variant), 0, fx, &sink);
  return os.str();
}

}  // namespace

int main() {
  const RunConfig sparse = load_run_config(fixture("configs/sar3_sparse.json"));
  const RunConfig dense = load_run_config(fixture("configs/sar3_nonsparse.json"));
  const TrialFixtures sparse_fx = TrialFixtures::load(sparse);
  const TrialFixtures dense_fx = TrialFixtures::load(dense);
  std::printf("fixture: %s, %zu episodes x %zu trials, seed %llu\n", dense.map_path.c_str(), dense.episodes,
              dense.trials, static_cast<unsigned long long>(dense.seed_base));

  const std::vector<Criterion> criteria = {
      {1, "pbrs_policy_invariance", 10, pbrs_invariance},
      {2, "masked_max_consistency", 30, masked_max_fuzz},
      {4, "sparse_flat_failure", 300,
       [&]() -> Outcome {
         std::vector<MetricsReport> rs;
         for (const char* v : {"Q", "Q-PS", "Q-RS", "Q-AS"}) rs.push_back(run_and_keep(sparse, v, sparse_fx));
         return from_check(check_sparse_flat(rs));
       }},
      {5, "hierarchy_dominance", 600,
       [&]() -> Outcome {
         std::vector<MetricsReport> rs{run_and_keep(dense, "HierQ", dense_fx), run_and_keep(dense, "Q", dense_fx)};
         return from_check(check_hierarchy_dominance(rs));
       }},
      {6, "shaping_llm_synergy", 600,
       [&]() -> Outcome {
         std::vector<MetricsReport> rs{run_and_keep(dense, "HierQ-LLM-PS", dense_fx)};
         if (const auto* h = find_report(g_reports, "HierQ", dense.setting_name())) rs.push_back(*h);
         return from_check(check_synergy(rs));
       }},
      {7, "safety_coupling", 600,
       [&]() -> Outcome {
         std::vector<MetricsReport> rs{run_and_keep(dense, "HierQ-PS", dense_fx),
                                       run_and_keep(dense, "HierQ-AS", dense_fx)};
         const auto ps = check_safety_coupling(rs, "HierQ-PS"), as = check_safety_coupling(rs, "HierQ-AS");
         return Outcome{ps.status == CheckStatus::Pass && as.status == CheckStatus::Pass,
                        "HierQ-PS " + ps.detail + "; HierQ-AS " + as.detail};
       }},
      // Pooled over the non-LLM runs of criteria 4, 5 and 7.
      {3, "random_psr_band", 120, [&]() -> Outcome { return from_check(check_random_psr(g_reports)); }},
      {8, "extractor_scorer_oracle", 10, scorer_oracle},
      {9, "metric_ordering", 10, [&]() -> Outcome { return from_check(check_ordering(g_reports)); }},
      {10, "determinism", 60,
       [&]() -> Outcome {
         std::string diff;
         std::size_t bytes = 0;
         for (const char* v : {"HierQ", "Q"}) {
           const auto a = run_log(dense, v, dense_fx), b = run_log(dense, v, dense_fx);
           bytes += a.size();
           if (a != b || a.empty()) diff += (diff.empty() ? "" : ", ") + std::string(v);
         }
         return Outcome{diff.empty(), diff.empty() ? "trial 0 logs identical for HierQ and Q (" +
                                                         std::to_string(bytes) + " bytes each run)"
                                                   : "logs differ: " + diff};
       }},
  };

  std::vector<std::pair<int, std::string>> lines;
  int failed = 0;
  for (const auto& c : criteria) {
    std::printf("running C%d %s\n", c.id, c.name.c_str());
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    char head[128];
    std::snprintf(head, sizeof head, "%s C%-2d %-24s %7.1fs/%-4.0fs ", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                  secs, c.budget_s);
    lines.emplace_back(c.id, head + o.detail + (in_budget ? "" : " [over time budget]"));
  }
  std::sort(lines.begin(), lines.end());
  std::printf("\n");
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
