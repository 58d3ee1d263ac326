#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lucifer/eval/extractor_bench.hpp"
#include "lucifer/eval/metrics.hpp"

namespace lucifer {

enum class ReportFormat { Csv, Json };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw ConfigError("report format must be csv or json");
}

inline std::string format_stat(const Stat& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f±%.1f", s.mean, s.std);
  return buf;
}

inline nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }
inline Stat stat_from_json(const nlohmann::json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"variant", r.variant},
          {"setting", r.setting},
          {"trials", r.trials},
          {"msr", stat_json(r.msr)},
          {"icsr", stat_json(r.icsr)},
          {"psr", stat_json(r.psr)},
          {"mswc", stat_json(r.mswc)},
          {"ar", stat_json(r.ar)},
          {"psr_undefined", r.psr_undefined},
          {"psr_attempts", r.psr_attempts},
          {"psr_correct", r.psr_correct}};
}

inline MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.variant = j.at("variant").get<std::string>();
  r.setting = j.at("setting").get<std::string>();
  r.trials = j.at("trials").get<std::size_t>();
  r.msr = stat_from_json(j.at("msr"));
  r.icsr = stat_from_json(j.at("icsr"));
  r.psr = stat_from_json(j.at("psr"));
  r.mswc = stat_from_json(j.at("mswc"));
  r.ar = stat_from_json(j.at("ar"));
  r.psr_undefined = j.at("psr_undefined").get<bool>();
  r.psr_attempts = j.at("psr_attempts").get<std::size_t>();
  r.psr_correct = j.at("psr_correct").get<std::size_t>();
  return r;
}

inline std::vector<MetricsReport> read_metrics_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  const auto doc = nlohmann::json::parse(in);
  std::vector<MetricsReport> out;
  for (const auto& j : doc.at("reports")) out.push_back(metrics_report_from_json(j));
  return out;
}

/// Variant rows by (setting x metric) columns; settings keep first-seen order.
inline std::string metrics_csv(const std::vector<MetricsReport>& reports) {
  std::vector<std::string> settings, variants;
  std::map<std::pair<std::string, std::string>, const MetricsReport*> cell;
  for (const auto& r : reports) {
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
    cell[{r.variant, r.setting}] = &r;
  }
  static const char* kMetrics[] = {"MSR", "ICSR", "PSR", "MSWC", "AR"};
  std::ostringstream os;
  os << "variant";
  for (const auto& s : settings)
    for (const char* m : kMetrics) os << ',' << s << ' ' << m;
  os << '\n';
  for (const auto& v : variants) {
    os << v;
    for (const auto& s : settings) {
      auto it = cell.find({v, s});
      if (it == cell.end()) {
        os << ",,,,,";
        continue;
      }
      const auto& r = *it->second;
      os << ',' << format_stat(r.msr) << ',' << format_stat(r.icsr) << ','
         << (r.psr_undefined ? std::string("n/a") : format_stat(r.psr)) << ',' << format_stat(r.mswc) << ','
         << format_stat(r.ar);
    }
    os << '\n';
  }
  return os.str();
}

namespace detail {
inline void write_all(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write failed for " + path);
}
}  // namespace detail

inline void emit_report(const std::vector<MetricsReport>& reports, ReportFormat fmt, const std::string& path) {
  if (reports.empty()) throw Error("no reports to emit");
  if (fmt == ReportFormat::Csv) {
    detail::write_all(path, metrics_csv(reports));
    return;
  }
  nlohmann::json j{{"reports", nlohmann::json::array()}};
  for (const auto& r : reports) j["reports"].push_back(to_json(r));
  detail::write_all(path, j.dump(2) + "\n");
}

inline nlohmann::json to_json(const BenchRow& r) {
  return {{"model", r.model},
          {"accuracy", r.accuracy},
          {"response_time", r.response_time},
          {"location_errors", r.location_errors},
          {"classification_errors", r.classification_errors},
          {"hallucination_errors", r.hallucination_errors},
          {"success_rate", r.success_rate},
          {"case_success_rate", r.case_success_rate},
          {"runs", r.runs}};
}

inline BenchRow bench_row_from_json(const nlohmann::json& j) {
  BenchRow r;
  r.model = j.at("model").get<std::string>();
  r.accuracy = j.at("accuracy").get<double>();
  r.response_time = j.at("response_time").get<double>();
  r.location_errors = j.at("location_errors").get<double>();
  r.classification_errors = j.at("classification_errors").get<double>();
  r.hallucination_errors = j.at("hallucination_errors").get<double>();
  r.success_rate = j.at("success_rate").get<double>();
  r.case_success_rate = j.at("case_success_rate").get<double>();
  r.runs = j.at("runs").get<std::size_t>();
  return r;
}

inline void emit_report(const std::vector<BenchRow>& rows, ReportFormat fmt, const std::string& path) {
  if (rows.empty()) throw Error("no rows to emit");
  if (fmt == ReportFormat::Json) {
    nlohmann::json j{{"rows", nlohmann::json::array()}};
    for (const auto& r : rows) j["rows"].push_back(to_json(r));
    detail::write_all(path, j.dump(2) + "\n");
    return;
  }
  std::ostringstream os;
  os << "model,accuracy,response_time,location,classification,hallucination,success_rate,case_success_rate\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.1f,%.3f,%.1f,%.1f,%.1f,%.1f,%.1f", r.accuracy, r.response_time,
                  r.location_errors, r.classification_errors, r.hallucination_errors, r.success_rate,
                  r.case_success_rate);
    os << r.model << ',' << buf << '\n';
  }
  detail::write_all(path, os.str());
}

}  // namespace lucifer
