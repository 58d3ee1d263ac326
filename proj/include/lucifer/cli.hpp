#pragma once

// Command-line front end. Exit codes: 0 ok, 1 runtime failure or failed
// --check, 2 usage error, 3 configuration error.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lucifer/eval/checks.hpp"
#include "lucifer/eval/extractor_bench.hpp"
#include "lucifer/eval/replay.hpp"
#include "lucifer/eval/report.hpp"
#include "lucifer/eval/trial.hpp"
#include "lucifer/session/server.hpp"

namespace lucifer {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

namespace cli {

struct TrainArgs {
  std::string config, map, variant, reward, prompts, out = "report.csv", format, log;
  std::optional<std::size_t> episodes, trials, threads;
  std::optional<std::uint64_t> seed;
};

struct BenchmarkArgs {
  std::vector<std::string> configs;
  std::vector<std::string> variants;
  std::optional<std::size_t> episodes, trials, threads;
  std::string out = "benchmark.csv", format;
  bool check = false;
};

struct ExtractBenchArgs {
  std::string corpus, kb, prompts, map, out = "extractor_bench.csv", format;
  std::vector<std::string> backends;
  std::size_t runs = 80;
  int info = 3;
};

struct ServeArgs {
  std::string config, variant = "HierQ-LLM-PS", bind = "127.0.0.1", static_dir;
  unsigned short port = 8080;
  double speed = 5.0;
  bool multi_session = false;
};

struct ReplayArgs {
  std::string log;
  std::optional<std::size_t> episode;
};

inline ReportFormat format_for(const std::string& explicit_fmt, const std::string& out) {
  if (!explicit_fmt.empty()) return parse_report_format(explicit_fmt);
  return out.size() >= 5 && out.substr(out.size() - 5) == ".json" ? ReportFormat::Json : ReportFormat::Csv;
}

inline void print_report_line(std::ostream& out, const MetricsReport& r) {
  out << std::left << std::setw(14) << r.variant << std::setw(20) << r.setting << " MSR " << format_stat(r.msr)
      << "  ICSR " << format_stat(r.icsr) << "  PSR " << (r.psr_undefined ? std::string("n/a") : format_stat(r.psr))
      << "  MSWC " << format_stat(r.mswc) << "  AR " << format_stat(r.ar) << '\n';
}

inline RunConfig train_config(const TrainArgs& a) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = load_run_config(a.config);
  if (!a.map.empty()) {
    cfg.map_path = a.map;
    if (a.config.empty()) cfg.info_setting = load_map_file(a.map).info_requirement();
  }
  if (!a.prompts.empty()) cfg.prompt_dir = a.prompts;
  if (!a.reward.empty()) cfg.reward_mode = a.reward == "sparse" ? RewardMode::Sparse : RewardMode::NonSparse;
  if (a.episodes) cfg.episodes = *a.episodes;
  if (a.trials) cfg.trials = *a.trials;
  if (a.seed) cfg.seed_base = *a.seed;
  cfg.validate();
  return cfg;
}

inline int run_train(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = train_config(a);
  const AgentVariant variant = *parse_variant(a.variant);
  const TrialFixtures fx = TrialFixtures::load(cfg);
  if (!a.log.empty()) {
    std::ofstream log(a.log, std::ios::trunc);
    if (!log) throw Error("cannot write " + a.log);
    JsonLinesSink sink(log);
    run_trial(cfg, variant, 0, fx, &sink);
  }
  const auto report = run_variant(cfg, variant, fx, nullptr, a.threads.value_or(0));
  print_report_line(out, report);
  emit_report(std::vector<MetricsReport>{report}, format_for(a.format, a.out), a.out);
  out << "report written to " << a.out << '\n';
  return kExitOk;
}

inline int run_benchmark(const BenchmarkArgs& a, std::ostream& out) {
  std::vector<AgentVariant> variants;
  if (a.variants.empty()) variants.assign(all_variants().begin(), all_variants().end());
  for (const auto& v : a.variants) variants.push_back(*parse_variant(v));

  std::vector<MetricsReport> reports;
  for (const auto& path : a.configs) {
    RunConfig cfg = load_run_config(path);
    if (a.episodes) cfg.episodes = *a.episodes;
    if (a.trials) cfg.trials = *a.trials;
    cfg.validate();
    const TrialFixtures fx = TrialFixtures::load(cfg);
    for (const auto& v : variants) {
      reports.push_back(run_variant(cfg, v, fx, nullptr, a.threads.value_or(0)));
      print_report_line(out, reports.back());
    }
  }
  emit_report(reports, format_for(a.format, a.out), a.out);
  out << "report written to " << a.out << '\n';
  if (!a.check) return kExitOk;

  std::vector<std::string> failed;
  for (const auto& c : directional_checks(reports)) {
    out << check_status_name(c.status) << "  " << c.name << "  " << c.detail << '\n';
    if (c.status == CheckStatus::Fail) failed.push_back(c.name);
  }
  if (failed.empty()) return kExitOk;
  out << "FAILED:";
  for (const auto& f : failed) out << ' ' << f;
  out << '\n';
  return kExitRuntime;
}

inline int run_extract_bench(const ExtractBenchArgs& a, std::ostream& out) {
  const auto kb = kb_from_json(read_json_file(a.kb));
  if (!a.map.empty()) kb.validate(load_map_file(a.map));
  const auto corpus = corpus_from_json(read_json_file(a.corpus));
  validate_corpus(corpus, kb);
  const auto tmpl = PromptTemplate::load(a.prompts + "/extractor_v1.txt");
  const auto ispace = InformationSpace::sar(a.info);
  std::vector<BenchRow> rows;
  for (const auto& b : a.backends) {
    const auto dir = std::filesystem::path(b).parent_path().string();
    auto backend = make_backend(backend_spec_from_json(read_json_file(b), dir));
    rows.push_back(run_extractor_bench(corpus, kb, ispace, *backend, tmpl, a.runs));
    const auto& r = rows.back();
    out << std::left << std::setw(24) << r.model << std::fixed << std::setprecision(1) << " acc " << r.accuracy
        << "  time " << std::setprecision(3) << r.response_time << std::setprecision(1) << "  loc "
        << r.location_errors << "  class " << r.classification_errors << "  hall " << r.hallucination_errors
        << "  success " << r.success_rate << "  case-success " << r.case_success_rate << '\n';
    out.unsetf(std::ios::floatfield);
  }
  emit_report(rows, format_for(a.format, a.out), a.out);
  out << "report written to " << a.out << '\n';
  return kExitOk;
}

inline int run_serve(const ServeArgs& a, std::ostream& out) {
  const RunConfig cfg = load_run_config(a.config);
  const AgentVariant variant = *parse_variant(a.variant);
  const TrialFixtures fx = TrialFixtures::load(cfg);
  // Fail on bad backends before binding.
  (void)Session(cfg, fx, variant, nullptr);
  SessionOptions opts;
  opts.speed = a.speed;
  SessionServer server({a.bind, a.port, a.static_dir, a.multi_session},
                       [&](Session::Outbox outbox) { return std::make_unique<Session>(cfg, fx, variant, std::move(outbox), opts); });
  out << "listening on http://" << a.bind << ':' << server.port() << " (session channel /session)" << std::endl;
  server.stop_on_signals();
  server.run();
  return kExitOk;
}

inline int run_replay(const ReplayArgs& a, std::ostream& out) {
  std::ifstream in(a.log);
  if (!in) throw ConfigError("cannot open " + a.log);
  out << render_trace(in, a.episode);
  return kExitOk;
}

inline CLI::Validator variant_name() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        if (parse_variant(s)) return {};
        std::string names;
        for (const auto& v : all_variants()) names += (names.empty() ? "" : ", ") + v.name();
        return "unknown variant '" + s + "' (expected one of: " + names + ")";
      },
      "VARIANT");
}

}  // namespace cli

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli;
  CLI::App app{"Hierarchical context-infused RL workbench", "lucifer"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train one variant and write a metrics report");
  t->add_option("--config", train.config, "run config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--map", train.map, "map file (overrides the config)")->check(CLI::ExistingFile);
  t->add_option("--variant", train.variant, "agent variant")->required()->check(variant_name());
  t->add_option("--episodes", train.episodes);
  t->add_option("--trials", train.trials);
  t->add_option("--seed", train.seed, "seed base; trial i uses seed+i");
  t->add_option("--reward", train.reward)->check(CLI::IsMember({"sparse", "non-sparse"}));
  t->add_option("--prompts", train.prompts, "prompt template directory")->check(CLI::ExistingDirectory);
  t->add_option("--out", train.out, "report file")->capture_default_str();
  t->add_option("--format", train.format)->check(CLI::IsMember({"csv", "json"}));
  t->add_option("--log", train.log, "JSON-lines log of trial 0");
  t->add_option("--threads", train.threads, "parallel trials (default: all cores)");

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "run the variant x setting matrix");
  b->add_option("--config", bench.configs, "one run config per setting")->required()->check(CLI::ExistingFile);
  b->add_option("--variants", bench.variants, "subset of variants (default: all)")->check(variant_name());
  b->add_option("--episodes", bench.episodes);
  b->add_option("--trials", bench.trials);
  b->add_option("--threads", bench.threads);
  b->add_option("--out", bench.out, "report file")->capture_default_str();
  b->add_option("--format", bench.format)->check(CLI::IsMember({"csv", "json"}));
  b->add_flag("--check", bench.check, "evaluate the directional checks; exit 1 if any fails");

  ExtractBenchArgs xb;
  auto* x = app.add_subcommand("extract-bench", "score extractor backends on a corpus");
  x->add_option("--corpus", xb.corpus)->required()->check(CLI::ExistingFile);
  x->add_option("--kb", xb.kb)->required()->check(CLI::ExistingFile);
  x->add_option("--prompts", xb.prompts)->required()->check(CLI::ExistingDirectory);
  x->add_option("--backend", xb.backends, "backend spec (JSON), one row each")->required()->check(CLI::ExistingFile);
  x->add_option("--runs", xb.runs, "independent runs")->capture_default_str()->check(CLI::PositiveNumber);
  x->add_option("--map", xb.map, "validate KB coordinates against this map")->check(CLI::ExistingFile);
  x->add_option("--info", xb.info, "information setting")->capture_default_str()->check(CLI::IsMember({3, 6}));
  x->add_option("--out", xb.out, "report file")->capture_default_str();
  x->add_option("--format", xb.format)->check(CLI::IsMember({"csv", "json"}));

  ServeArgs sv;
  auto* s = app.add_subcommand("serve", "run the interactive session server");
  s->add_option("--config", sv.config)->required()->check(CLI::ExistingFile);
  s->add_option("--variant", sv.variant, "agent variant")->capture_default_str()->check(variant_name());
  s->add_option("--bind", sv.bind, "address")->capture_default_str();
  s->add_option("--port", sv.port, "port (0 picks one)")->capture_default_str();
  s->add_option("--static", sv.static_dir, "UI bundle directory")->check(CLI::ExistingDirectory);
  s->add_option("--speed", sv.speed, "steps per second")->capture_default_str()->check(CLI::Range(0.01, 1000.0));
  s->add_flag("--multi-session", sv.multi_session, "allow concurrent sessions");

  ReplayArgs rp;
  auto* r = app.add_subcommand("replay", "render a JSON-lines episode log as text");
  r->add_option("--log", rp.log)->required()->check(CLI::ExistingFile);
  r->add_option("--episode", rp.episode, "only this episode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (t->parsed()) {
      if (train.config.empty() && train.map.empty()) {
        err << "error: train needs --config or --map\n\n" << t->help();
        return kExitUsage;
      }
      return run_train(train, out);
    }
    if (b->parsed()) return run_benchmark(bench, out);
    if (x->parsed()) return run_extract_bench(xb, out);
    if (s->parsed()) return run_serve(sv, out);
    if (r->parsed()) return run_replay(rp, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace lucifer
