#include "dcitl/experiments/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dcitl/common/rng.hpp"

namespace dcitl::experiments {

namespace {

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::markdown: return "markdown";
    case ReportFormat::plotdata: return "plotdata";
  }
  return "?";
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  if (s == "plotdata") return ReportFormat::plotdata;
  throw std::invalid_argument("unknown report format '" + s + "' (csv, markdown, plotdata)");
}

ResultRow to_row(const RunResult& r) {
  ResultRow row{to_string(r.plan.method), r.plan.source, r.plan.target, r.plan.ratio.str(), r.plan.seed,
                r.ok() ? "ok" : r.error, {}};
  const std::optional<MetricsReport>* reports[] = {&r.in, &r.out, &r.adapted};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!*reports[k]) continue;
    const MetricsReport& m = **reports[k];
    row.metrics[3 * k] = m.accuracy;
    row.metrics[3 * k + 1] = m.f1_positive();
    row.metrics[3 * k + 2] = m.f1_negative();
  }
  return row;
}

std::vector<ResultRow> to_rows(std::span<const RunResult> results) {
  std::vector<ResultRow> rows;
  rows.reserve(results.size());
  for (const auto& r : results) rows.push_back(to_row(r));
  return rows;
}

void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  std::ofstream out = open_out(path);
  out << "method,source,target,ratio,seed,status";
  for (const char* c : kMetricColumns) out << ',' << c;
  out << '\n';
  for (const auto& r : rows) {
    out << quote(r.method) << ',' << quote(r.source) << ',' << quote(r.target) << ',' << quote(r.ratio) << ','
        << r.seed << ',' << quote(r.status);
    for (const auto& v : r.metrics) {
      out << ',';
      if (v) out << fmt(*v, "%.17g");
    }
    out << '\n';
  }
  finish(out, path);
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line).size() != 6 + kMetricColumns.size())
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6 + kMetricColumns.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(6 + kMetricColumns.size()) + " fields");
    ResultRow r{f[0], f[1], f[2], f[3], std::stoull(f[4]), f[5], {}};
    for (std::size_t k = 0; k < kMetricColumns.size(); ++k)
      if (!f[6 + k].empty()) r.metrics[k] = std::stod(f[6 + k]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows) {
  std::vector<std::string> ratios, methods;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  struct Acc {
    std::size_t runs = 0;
    std::array<double, 9> sum{};
    std::array<std::size_t, 9> count{};
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& r : rows) {
    remember(ratios, r.ratio);
    remember(methods, r.method);
    Acc& a = acc[{r.ratio, r.method}];
    if (r.status != "ok") continue;
    ++a.runs;
    for (std::size_t k = 0; k < 9; ++k) {
      if (!r.metrics[k]) continue;
      a.sum[k] += *r.metrics[k];
      ++a.count[k];
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& ratio : ratios) {
    for (const auto& method : methods) {
      auto it = acc.find({ratio, method});
      if (it == acc.end()) continue;
      SummaryRow s{method, ratio, it->second.runs, {}};
      for (std::size_t k = 0; k < 9; ++k)
        if (it->second.count[k]) s.metrics[k] = it->second.sum[k] / static_cast<double>(it->second.count[k]);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string format_markdown(std::span<const SummaryRow> summary) {
  std::ostringstream out;
  out << "Method | Ratio | In | f1(p) | f1(n) | Out | f1(p) | f1(n) | Adapted | f1(p) | f1(n)\n";
  out << "---|---|---|---|---|---|---|---|---|---|---\n";
  for (const auto& s : summary) {
    out << s.method << " | " << s.ratio;
    for (const auto& v : s.metrics) out << " | " << (v ? fmt(*v, "%.4f") : std::string("-"));
    out << '\n';
  }
  return out.str();
}

void write_plotdata_csv(const std::filesystem::path& path, std::span<const SummaryRow> summary) {
  std::vector<std::string> ratios, methods;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& s : summary) {
    remember(ratios, s.ratio);
    remember(methods, s.method);
  }
  std::ofstream out = open_out(path);
  out << "ratio_group,class,method,f1\n";
  for (const auto& ratio : ratios) {
    for (const char* cls : {"Pos", "Neg"}) {
      const std::size_t offset = std::string(cls) == "Pos" ? 1 : 2;
      for (const auto& method : methods) {
        auto it = std::find_if(summary.begin(), summary.end(),
                               [&](const SummaryRow& s) { return s.ratio == ratio && s.method == method; });
        std::optional<double> v;
        if (it != summary.end()) v = it->metrics[6 + offset] ? it->metrics[6 + offset] : it->metrics[3 + offset];
        out << ratio << ',' << cls << ',' << method << ',';
        if (v) out << fmt(*v, "%.17g");
        out << '\n';
      }
    }
  }
  finish(out, path);
}

std::filesystem::path emit_report(const std::filesystem::path& dir, std::span<const ResultRow> rows,
                                  ReportFormat format) {
  if (rows.empty()) throw std::invalid_argument("no results to report");
  switch (format) {
    case ReportFormat::csv: {
      const auto path = dir / "results.csv";
      write_results_csv(path, rows);
      return path;
    }
    case ReportFormat::markdown: {
      const auto path = dir / "results.md";
      std::ofstream out = open_out(path);
      const auto summary = summarize(rows);
      out << format_markdown(summary);
      finish(out, path);
      return path;
    }
    case ReportFormat::plotdata: {
      const auto path = dir / "plotdata.csv";
      const auto summary = summarize(rows);
      write_plotdata_csv(path, summary);
      return path;
    }
  }
  throw std::invalid_argument("unknown report format");
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(ss.str())));
  return buf;
}

void write_manifest(const std::filesystem::path& out_dir, const Manifest& manifest) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = entry.path().lexically_relative(out_dir);
    if (rel == "manifest.json" || *rel.begin() == "cache") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.generic_string() < b.generic_string(); });
  nlohmann::json j = {{"command", manifest.command},
                      {"config_hash", manifest.config_hash},
                      {"seeds", manifest.seeds},
                      {"files", nlohmann::json::array()}};
  for (const auto& rel : files) {
    const auto full = out_dir / rel;
    j["files"].push_back(
        {{"path", rel.generic_string()}, {"bytes", std::filesystem::file_size(full)}, {"fnv1a", file_hash(full)}});
  }
  const auto path = out_dir / "manifest.json";
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

}  // namespace dcitl::experiments
