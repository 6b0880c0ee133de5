#pragma once

// Result tables, per-variant delta rows and extraction-timing ingest.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmrec/error.hpp"
#include "mmrec/evaluator.hpp"

namespace mmrec {

enum class ReportFormat { Csv, Markdown };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw Error(ErrorCode::Config, "report format must be csv|markdown, got '" + std::string(s) + "'");
}

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline void check_csv_field(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos)
    throw Error(ErrorCode::InvalidValue, "CSV field contains a separator: '" + s + "'");
}

// ---------------------------------------------------------------------------
// MetricReport rows

inline const char* kMetricCsvHeader =
    "model,extractor_tag,K,recall,ndcg,hr,num_evaluated_users,seed";

inline std::string metric_csv_row(const MetricReport& r) {
  check_csv_field(r.model_name);
  check_csv_field(r.extractor_tag);
  std::ostringstream out;
  out << r.model_name << ',' << r.extractor_tag << ',' << r.k << ',' << format_double(r.recall)
      << ',' << format_double(r.ndcg) << ',' << format_double(r.hr) << ','
      << r.num_evaluated_users << ',' << r.seed;
  return out.str();
}

inline MetricReport parse_metric_csv_row(const std::string& line) {
  const auto f = split_csv_line(line);
  if (f.size() != 8) throw Error(ErrorCode::Malformed, "metric row needs 8 fields: " + line);
  MetricReport r;
  try {
    r.model_name = f[0];
    r.extractor_tag = f[1];
    r.k = std::stoull(f[2]);
    r.recall = std::stod(f[3]);
    r.ndcg = std::stod(f[4]);
    r.hr = std::stod(f[5]);
    r.num_evaluated_users = std::stoull(f[6]);
    r.seed = std::stoull(f[7]);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Malformed, "metric row: " + line);
  }
  return r;
}

inline std::vector<MetricReport> read_metric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<MetricReport> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("model,", 0) == 0) continue;
    }
    out.push_back(parse_metric_csv_row(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables

/// Per-column emphasis: "best" for every row holding the maximum, "second"
/// for rows holding the runner-up value, but only when the maximum is
/// unique. Ties for best are all bolded and nothing is underlined.
enum class Emphasis { None, Best, Second };

inline std::vector<Emphasis> rank_emphasis(const std::vector<double>& column) {
  std::vector<Emphasis> out(column.size(), Emphasis::None);
  if (column.empty()) return out;
  const double best = *std::max_element(column.begin(), column.end());
  std::size_t n_best = 0;
  for (std::size_t r = 0; r < column.size(); ++r)
    if (column[r] == best) {
      out[r] = Emphasis::Best;
      ++n_best;
    }
  if (n_best > 1) return out;
  double second = -INFINITY;
  bool found = false;
  for (double v : column)
    if (v < best && (!found || v > second)) {
      second = v;
      found = true;
    }
  if (!found) return out;
  for (std::size_t r = 0; r < column.size(); ++r)
    if (column[r] == second) out[r] = Emphasis::Second;
  return out;
}

inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

inline std::string emit_report(const std::vector<MetricReport>& reports, ReportFormat format) {
  if (reports.empty()) throw Error(ErrorCode::EmptyRecords, "nothing to report");
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << kMetricCsvHeader << '\n';
    for (const auto& r : reports) out << metric_csv_row(r) << '\n';
    return out.str();
  }
  const std::size_t k = reports.front().k;
  std::vector<double> cols[3];
  for (const auto& r : reports) {
    cols[0].push_back(r.recall);
    cols[1].push_back(r.ndcg);
    cols[2].push_back(r.hr);
  }
  std::vector<Emphasis> emph[3];
  for (int c = 0; c < 3; ++c) emph[c] = rank_emphasis(cols[c]);

  out << "| Model | Extractor | Recall@" << k << " | nDCG@" << k << " | HR@" << k << " |\n";
  out << "|---|---|---:|---:|---:|\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    out << "| " << reports[r].model_name << " | " << reports[r].extractor_tag << " |";
    for (int c = 0; c < 3; ++c) {
      const std::string v = percent(cols[c][r]);
      switch (emph[c][r]) {
        case Emphasis::Best: out << " **" << v << "** |"; break;
        case Emphasis::Second: out << " <u>" << v << "</u> |"; break;
        default: out << ' ' << v << " |";
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Variation data: per-key deltas of each variant against a baseline.

struct TaggedReports {
  std::string variant_tag;
  std::vector<MetricReport> reports;
};

inline std::string emit_variation_data(const std::vector<MetricReport>& baseline,
                                       const std::vector<TaggedReports>& variants) {
  using Key = std::pair<std::string, std::string>;
  auto keyed = [](const std::vector<MetricReport>& rs, const std::string& what) {
    std::map<Key, const MetricReport*> m;
    for (const auto& r : rs)
      if (!m.emplace(Key{r.model_name, r.extractor_tag}, &r).second)
        throw Error(ErrorCode::KeyMismatch, what + ": duplicate key " + r.model_name + "/" +
                                                r.extractor_tag);
    return m;
  };
  const auto base = keyed(baseline, "baseline");
  std::ostringstream out;
  out << "model,extractor_tag,variant_tag,metric,delta\n";
  for (const auto& v : variants) {
    check_csv_field(v.variant_tag);
    const auto var = keyed(v.reports, v.variant_tag);
    for (const auto& [key, r] : var)
      if (!base.count(key))
        throw Error(ErrorCode::KeyMismatch, v.variant_tag + ": " + key.first + "/" + key.second +
                                                " not in baseline");
    for (const auto& [key, b] : base) {
      auto it = var.find(key);
      if (it == var.end())
        throw Error(ErrorCode::KeyMismatch, v.variant_tag + ": missing " + key.first + "/" +
                                                key.second);
      const MetricReport& r = *it->second;
      const std::pair<const char*, double> deltas[] = {
          {"recall", r.recall - b->recall}, {"ndcg", r.ndcg - b->ndcg}, {"hr", r.hr - b->hr}};
      for (const auto& [metric, d] : deltas)
        out << key.first << ',' << key.second << ',' << v.variant_tag << ',' << metric << ','
            << format_double(d) << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Extraction timings: dataset_tag,extractor,batch_size,seconds

struct TimingRow {
  std::string dataset_tag;
  std::string extractor;
  std::size_t batch_size = 0;
  double seconds = 0.0;
};

inline std::vector<TimingRow> read_timings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Malformed, "timing CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "dataset_tag,extractor,batch_size,seconds")
    throw Error(ErrorCode::Malformed, "unexpected timing CSV header: " + line);
  std::vector<TimingRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    TimingRow t;
    try {
      if (f.size() != 4) throw std::invalid_argument("fields");
      t.dataset_tag = f[0];
      t.extractor = f[1];
      std::size_t used = 0;
      t.batch_size = std::stoull(f[2], &used);
      if (used != f[2].size() || t.batch_size == 0) throw std::invalid_argument("batch");
      t.seconds = std::stod(f[3], &used);
      if (used != f[3].size() || !(t.seconds >= 0.0) || !std::isfinite(t.seconds))
        throw std::invalid_argument("seconds");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Malformed, "timing CSV line " + std::to_string(lineno));
    }
    rows.push_back(std::move(t));
  }
  return rows;
}

/// Extractor x batch-size pivot, one table per dataset tag.
inline std::string emit_timing_table(const std::vector<TimingRow>& rows) {
  std::map<std::string, std::map<std::string, std::map<std::size_t, double>>> by_dataset;
  std::set<std::size_t> batches;
  for (const auto& r : rows) {
    by_dataset[r.dataset_tag][r.extractor][r.batch_size] = r.seconds;
    batches.insert(r.batch_size);
  }
  std::ostringstream out;
  for (const auto& [dataset, extractors] : by_dataset) {
    out << "\n**" << dataset << "** (seconds)\n\n| Extractor |";
    for (auto b : batches) out << " bs=" << b << " |";
    out << "\n|---|";
    for (std::size_t n = 0; n < batches.size(); ++n) out << "---:|";
    out << '\n';
    for (const auto& [name, cells] : extractors) {
      out << "| " << name << " |";
      for (auto b : batches) {
        auto it = cells.find(b);
        char buf[32] = "-";
        if (it != cells.end()) std::snprintf(buf, sizeof buf, "%.2f", it->second);
        out << ' ' << buf << " |";
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace mmrec
