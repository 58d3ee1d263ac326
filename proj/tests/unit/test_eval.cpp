#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lucifer/eval/checks.hpp"
#include "lucifer/eval/extractor_bench.hpp"
#include "lucifer/eval/replay.hpp"
#include "lucifer/eval/report.hpp"
#include "lucifer/eval/trial.hpp"

using namespace lucifer;

namespace {

std::string fixture(const std::string& rel) { return std::string(LUCIFER_FIXTURE_DIR) + "/" + rel; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lucifer_eval_" + std::to_string(::getpid()) + "_" + name)).string();
}

EpisodeSummary ep(bool complete, bool collected, std::size_t hazards, double reward = 0.0) {
  EpisodeSummary e;
  e.mission_complete = complete;
  e.fully_collected = collected;
  e.hazard_hits = hazards;
  e.total_reward = reward;
  return e;
}

ExtractionResult result_of(std::vector<std::pair<std::string, std::string>> emitted, const KnowledgeBase& kb) {
  ExtractionResult r;
  for (auto& [loc, cat] : emitted) {
    EmittedEntity e{loc, cat, EntityOutcome::Malformed};
    auto c = parse_category(cat);
    if (c) {
      if (const auto* hit = kb.resolve(loc)) {
        e.outcome = EntityOutcome::Insight;
        r.insights.push_back({hit->name, *c, hit->coordinate, InsightSource::HumanReport});
      } else {
        e.outcome = EntityOutcome::Hallucination;
        r.hallucinations.push_back(loc);
      }
    }
    r.emitted.push_back(e);
  }
  return r;
}

ExtractorBenchCase gold_case(std::vector<std::pair<std::string, InsightCategory>> gold) {
  ExtractorBenchCase c;
  c.input = {"g", "text", gold.size() > 1 ? Complexity::Complex : Complexity::Simple};
  for (auto& [l, cat] : gold) c.gold.push_back({l, cat});
  return c;
}

KnowledgeBase sar3_kb() { return kb_from_json(read_json_file(fixture("kb/sar3_kb.json"))); }

RunConfig small_config(std::size_t episodes = 40, std::size_t trials = 2) {
  auto cfg = load_run_config(fixture("configs/sar3_nonsparse.json"));
  cfg.episodes = episodes;
  cfg.trials = trials;
  return cfg;
}

MetricsReport report(std::string variant, std::string setting, double msr, double icsr, double mswc,
                     std::size_t attempts = 0, std::size_t correct = 0) {
  MetricsReport r;
  r.variant = std::move(variant);
  r.setting = std::move(setting);
  r.msr = {msr, 0};
  r.icsr = {icsr, 0};
  r.mswc = {mswc, 0};
  r.psr_attempts = attempts;
  r.psr_correct = correct;
  r.trials = 1;
  return r;
}

}  // namespace

TEST(Metrics, ConstructedLogs) {
  std::vector<EpisodeSummary> eps;
  for (int i = 0; i < 4; ++i) eps.push_back(ep(true, true, 0, 100));
  for (int i = 0; i < 2; ++i) eps.push_back(ep(true, true, 1, 90));
  eps.push_back(ep(false, true, 0, -10));
  for (int i = 0; i < 3; ++i) eps.push_back(ep(false, false, 2, -40));
  auto m = compute_metrics(eps, false);
  EXPECT_DOUBLE_EQ(m.msr, 60.0);
  EXPECT_DOUBLE_EQ(m.icsr, 70.0);
  EXPECT_DOUBLE_EQ(m.mswc, 40.0);
  EXPECT_DOUBLE_EQ(m.ar, (400.0 + 180.0 - 10.0 - 120.0) / 10.0);
  EXPECT_FALSE(m.psr_defined);
  EXPECT_EQ(m.psr, 0.0);
}

TEST(Metrics, PsrSourceFollowsVariant) {
  EpisodeSummary e;
  e.random_collect_attempts = 26;
  e.random_collect_correct = 1;
  e.facilitator_collect_attempts = 10;
  e.facilitator_collect_correct = 9;
  std::vector<EpisodeSummary> eps{e};
  EXPECT_NEAR(compute_metrics(eps, false).psr, 100.0 / 26.0, 1e-12);
  EXPECT_DOUBLE_EQ(compute_metrics(eps, true).psr, 90.0);
}

TEST(Metrics, AggregateSampleStdAndDefinedPsr) {
  TrialMetrics a, b, c;
  a.msr = 50;
  b.msr = 70;
  c.msr = 60;
  a.psr = 4;
  a.psr_defined = true;
  a.psr_attempts = 100;
  a.psr_correct = 4;
  std::vector<TrialMetrics> ts{a, b, c};
  auto r = aggregate("Q", "3-info non-sparse", ts);
  EXPECT_DOUBLE_EQ(r.msr.mean, 60.0);
  EXPECT_DOUBLE_EQ(r.msr.std, 10.0);
  EXPECT_DOUBLE_EQ(r.psr.mean, 4.0);
  EXPECT_FALSE(r.psr_undefined);
  std::vector<TrialMetrics> none{b, c};
  EXPECT_TRUE(aggregate("Q", "x", none).psr_undefined);
  // Order of trials does not matter.
  std::vector<TrialMetrics> rev{c, b, a};
  EXPECT_EQ(aggregate("Q", "3-info non-sparse", rev).msr, r.msr);
}

TEST(Scorer, HandComputedCases) {
  auto kb = sar3_kb();
  using IC = InsightCategory;
  // Perfect.
  auto s = score_extraction(result_of({{"North Bridge", "HAZ"}}, kb), gold_case({{"North Bridge", IC::HAZ}}), kb);
  EXPECT_EQ(s.accuracy, 100.0);
  EXPECT_TRUE(s.success);
  // Two gold, one miscategorized.
  s = score_extraction(result_of({{"North Bridge", "HAZ"}, {"Old Library", "HAZ"}}, kb),
                       gold_case({{"North Bridge", IC::HAZ}, {"Old Library", IC::POI}}), kb);
  EXPECT_EQ(s.accuracy, 75.0);
  EXPECT_EQ(s.classification_errors, 1);
  EXPECT_EQ(s.location_errors, 0);
  EXPECT_FALSE(s.success);
  // Empty extraction vs three gold.
  s = score_extraction(result_of({}, kb),
                       gold_case({{"North Bridge", IC::HAZ}, {"Old Library", IC::POI}, {"Gas Works", IC::HAZ}}), kb);
  EXPECT_EQ(s.accuracy, 0.0);
  EXPECT_EQ(s.location_errors, 3);
  EXPECT_FALSE(s.success);
  // Correct plus an unknown place and a real but non-gold place.
  s = score_extraction(result_of({{"North Bridge", "HAZ"}, {"Ghost Plaza", "POI"}, {"Gas Works", "HAZ"}}, kb),
                       gold_case({{"North Bridge", IC::HAZ}}), kb);
  EXPECT_EQ(s.accuracy, 100.0);
  EXPECT_EQ(s.hallucination_errors, 2);
  EXPECT_FALSE(s.success);
  EXPECT_LE(s.earned, s.possible);
}

TEST(Corpus, FixtureShape) {
  auto corpus = corpus_from_json(read_json_file(fixture("corpus/sar3_corpus.json")));
  ASSERT_EQ(corpus.size(), 14u);
  EXPECT_EQ(std::count_if(corpus.begin(), corpus.end(),
                          [](const auto& c) { return c.input.complexity == Complexity::Complex; }),
            7);
  EXPECT_NO_THROW(validate_corpus(corpus, sar3_kb()));
  corpus[0].gold[0].location = "Atlantis";
  EXPECT_THROW(validate_corpus(corpus, sar3_kb()), ValidationError);
}

namespace {

BenchRow bench_with(const std::string& table, std::size_t runs) {
  auto corpus = corpus_from_json(read_json_file(fixture("corpus/sar3_corpus.json")));
  auto spec = backend_spec_from_json({{"kind", "scripted"}, {"table", table}}, fixture("scripted"));
  auto backend = make_backend(spec);
  return run_extractor_bench(corpus, sar3_kb(), InformationSpace::sar(3), *backend,
                             PromptTemplate::load(fixture("prompts/extractor_v1.txt")), runs);
}

}  // namespace

TEST(ExtractorBench, PerfectRow) {
  auto row = bench_with("extractor_perfect.json", 5);
  EXPECT_DOUBLE_EQ(row.accuracy, 100.0);
  EXPECT_EQ(row.location_errors, 0.0);
  EXPECT_EQ(row.classification_errors, 0.0);
  EXPECT_EQ(row.hallucination_errors, 0.0);
  EXPECT_DOUBLE_EQ(row.success_rate, 100.0);
  EXPECT_DOUBLE_EQ(row.response_time, 0.25);
  EXPECT_EQ(row.runs, 5u);
}

TEST(ExtractorBench, DropOneLocation) {
  // c3 has four gold places and loses one: that case scores 6/8.
  auto row = bench_with("extractor_drop_one.json", 4);
  EXPECT_NEAR(row.accuracy, (13 * 100.0 + 75.0) / 14.0, 1e-9);
  EXPECT_DOUBLE_EQ(row.location_errors, 1.0);
  EXPECT_DOUBLE_EQ(row.success_rate, 0.0);
  EXPECT_NEAR(row.case_success_rate, 100.0 * 13 / 14, 1e-9);
}

TEST(ExtractorBench, OneHallucinationPerRun) {
  auto row = bench_with("extractor_hallucinate.json", 3);
  EXPECT_DOUBLE_EQ(row.hallucination_errors, 1.0);
  EXPECT_DOUBLE_EQ(row.accuracy, 100.0);
  EXPECT_DOUBLE_EQ(row.success_rate, 0.0);
  EXPECT_THROW(bench_with("extractor_perfect.json", 0), ConfigError);
}

TEST(Report, CsvShape) {
  std::vector<MetricsReport> rs{report("Q", "3-info non-sparse", 10, 20, 5), report("HierQ", "3-info non-sparse", 80, 90, 70)};
  rs[0].psr_undefined = true;
  rs[1].msr.std = 1.26;
  const auto csv = metrics_csv(rs);
  std::istringstream in(csv);
  std::string header, a, b, extra;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(header,
            "variant,3-info non-sparse MSR,3-info non-sparse ICSR,3-info non-sparse PSR,3-info non-sparse MSWC,"
            "3-info non-sparse AR");
  EXPECT_EQ(a, "Q,10.0±0.0,20.0±0.0,n/a,5.0±0.0,0.0±0.0");
  EXPECT_TRUE(b.starts_with("HierQ,80.0±1.3,9")) << b;
}

TEST(Report, JsonRoundTripAndEmpty) {
  std::vector<MetricsReport> rs{report("Q", "3-info sparse", 0, 12.5, 0, 300, 11),
                                report("HierQ-AS", "3-info non-sparse", 81.3, 90.1, 81.3)};
  rs[1].ar = {12.345678901, 3.25};
  const auto path = temp_path("r.json");
  emit_report(rs, ReportFormat::Json, path);
  EXPECT_EQ(read_metrics_reports(path), rs);
  std::filesystem::remove(path);
  EXPECT_THROW(emit_report(std::vector<MetricsReport>{}, ReportFormat::Csv, path), Error);
  EXPECT_FALSE(std::filesystem::exists(path));
  EXPECT_THROW(parse_report_format("xml"), ConfigError);

  BenchRow row{"m", 98.2, 0.25, 1, 0, 0, 0, 92.9, 4};
  emit_report(std::vector<BenchRow>{row}, ReportFormat::Json, path);
  EXPECT_EQ(bench_row_from_json(read_json_file(path).at("rows").at(0)), row);
  std::filesystem::remove(path);
}

TEST(Config, LoadsFixtureAndRejectsBadValues) {
  auto cfg = load_run_config(fixture("configs/sar3_nonsparse.json"));
  EXPECT_EQ(cfg.trials, 10u);
  EXPECT_EQ(cfg.seed_base, 1000u);
  EXPECT_EQ(cfg.setting_name(), "3-info non-sparse");
  EXPECT_EQ(cfg.insights.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(cfg.map_path));
  EXPECT_EQ(load_run_config(fixture("configs/sar3_sparse.json")).setting_name(), "3-info sparse");
  EXPECT_EQ(load_run_config(fixture("configs/sar6_nonsparse.json")).setting_name(), "6-info non-sparse");
  EXPECT_THROW(load_run_config("/nonexistent.json"), ConfigError);
  auto bad = cfg;
  bad.info_setting = 4;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(run_config_from_json({{"env", {{"map", "x.map"}, {"reward", "dense"}}}}), ConfigError);
}

TEST(Variants, ZooNames) {
  std::set<std::string> names;
  for (const auto& v : all_variants()) names.insert(v.name());
  EXPECT_EQ(names, (std::set<std::string>{"Q", "Q-PS", "Q-RS", "Q-AS", "HierQ", "HierQ-LLM", "HierQ-PS", "HierQ-RS",
                                          "HierQ-AS", "HierQ-LLM-PS"}));
  EXPECT_FALSE(parse_variant("hierq"));
  EXPECT_EQ(parse_variant("HierQ-LLM-PS")->facilitator, true);
}

// Each shaping variant leaves only its own trace in the logs.
TEST(Variants, WiringAudit) {
  auto cfg = small_config(30, 1);
  const auto fx = TrialFixtures::load(cfg);
  for (const auto& v : all_variants()) {
    MemorySink sink;
    run_trial(cfg, v, 0, fx, &sink);
    const bool overlays = !sink.overlays.empty();
    bool shaped = false, masked = false, facilitated = false;
    for (const auto& r : sink.steps) {
      shaped |= r.shaped_reward.has_value();
      masked |= r.adjusted_mask.has_value();
      if (r.source == SelectionSource::Facilitator) {
        facilitated = true;
        EXPECT_EQ(r.worker, Worker::CollectInfo) << v.name();
      }
      if (v.hierarchical) {
        EXPECT_NE(r.worker, Worker::Flat);
      }
    }
    EXPECT_EQ(overlays, v.shaping == ShapingKind::Policy) << v.name();
    EXPECT_EQ(shaped, v.shaping == ShapingKind::Reward) << v.name();
    EXPECT_EQ(masked, v.shaping == ShapingKind::ActionSpace) << v.name();
    EXPECT_EQ(facilitated, v.facilitator) << v.name();
  }
}

TEST(Trial, ByteIdenticalLogs) {
  auto cfg = small_config(25, 1);
  const auto fx = TrialFixtures::load(cfg);
  for (const char* name : {"Q", "HierQ", "HierQ-LLM-PS"}) {
    auto run = [&] {
      std::ostringstream os;
      JsonLinesSink sink(os);
      run_trial(cfg, *parse_variant(name), 0, fx, &sink);
      return os.str();
    };
    const auto a = run();
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, run()) << name;
  }
}

TEST(Trial, ParallelMatchesSequential) {
  auto cfg = small_config(30, 3);
  const auto fx = TrialFixtures::load(cfg);
  const auto v = *parse_variant("HierQ-PS");
  EXPECT_EQ(run_variant(cfg, v, fx, nullptr, 1), run_variant(cfg, v, fx, nullptr, 3));
}

TEST(Trial, SparseFlatNeverFinishesShortRun) {
  auto cfg = load_run_config(fixture("configs/sar3_sparse.json"));
  cfg.episodes = 30;
  auto r = run_trial(cfg, *parse_variant("Q"), 0);
  EXPECT_EQ(r.metrics.msr, 0.0);
  EXPECT_LE(r.metrics.mswc, r.metrics.msr);
  EXPECT_LE(r.metrics.msr, r.metrics.icsr);
}

TEST(Checks, PassFailSkip) {
  std::vector<MetricsReport> rs{
      report("Q", "3-info non-sparse", 20, 40, 10, 20000, 780),
      report("HierQ", "3-info non-sparse", 60, 70, 50, 5000, 190),
      report("HierQ-LLM-PS", "3-info non-sparse", 75, 80, 75, 1000, 999),
      report("HierQ-AS", "3-info non-sparse", 70, 75, 70),
      report("HierQ-PS", "3-info non-sparse", 70, 75, 65),
      report("Q", "3-info sparse", 0, 5, 0),
      report("Q-PS", "3-info sparse", 0.5, 5, 0),
  };
  EXPECT_EQ(check_random_psr(rs).status, CheckStatus::Pass);
  EXPECT_EQ(check_sparse_flat(rs).status, CheckStatus::Pass);
  EXPECT_EQ(check_hierarchy_dominance(rs).status, CheckStatus::Pass);
  EXPECT_EQ(check_synergy(rs).status, CheckStatus::Pass);
  EXPECT_EQ(check_safety_coupling(rs, "HierQ-AS").status, CheckStatus::Pass);
  EXPECT_EQ(check_safety_coupling(rs, "HierQ-PS").status, CheckStatus::Fail);
  EXPECT_EQ(check_safety_coupling(rs, "HierQ-RS").status, CheckStatus::Skipped);
  EXPECT_EQ(check_ordering(rs).status, CheckStatus::Pass);

  rs[0].msr.mean = 45;
  EXPECT_EQ(check_hierarchy_dominance(rs).status, CheckStatus::Fail);
  rs.push_back(report("HierQ-RS", "3-info non-sparse", 70, 60, 50));
  EXPECT_EQ(check_ordering(rs).status, CheckStatus::Fail);
  std::vector<MetricsReport> few{report("Q", "3-info non-sparse", 0, 0, 0, 100, 4)};
  EXPECT_EQ(check_random_psr(few).status, CheckStatus::Fail);
  EXPECT_EQ(directional_checks({}).size(), 7u);
}

TEST(Replay, RendersTrace) {
  auto cfg = small_config(2, 1);
  std::ostringstream os;
  JsonLinesSink sink(os);
  run_trial(cfg, *parse_variant("HierQ-PS"), 0, TrialFixtures::load(cfg), &sink);
  std::istringstream in(os.str());
  const auto text = render_trace(in, 1);
  EXPECT_NE(text.find("ep 1 end  steps="), std::string::npos);
  EXPECT_NE(text.find("ep 1 step 0 "), std::string::npos);
  EXPECT_FALSE(text.starts_with("ep 0 "));
  EXPECT_EQ(text.find("\nep 0 "), std::string::npos);
  std::istringstream bad("{\"type\":\"nope\",\"episode\":0}\n");
  EXPECT_THROW(render_trace(bad), ParseError);
  std::istringstream junk("not json\n");
  EXPECT_THROW(render_trace(junk), ParseError);
}
