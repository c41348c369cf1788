#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcitl/experiments/runner.hpp"

namespace dcitl::experiments {

// Column order of the nine metric cells.
inline constexpr std::array<const char*, 9> kMetricColumns = {
    "in_acc", "in_f1p", "in_f1n", "out_acc", "out_f1p", "out_f1n", "adapted_acc", "adapted_f1p", "adapted_f1n"};

using MetricCells = std::array<std::optional<double>, 9>;

// One per-seed row of results.csv.
struct ResultRow {
  std::string method, source, target, ratio;
  std::uint64_t seed = 0;
  std::string status = "ok";  // otherwise the stage-tagged error
  MetricCells metrics;
};

// Seed- and pair-averaged cell keyed by (method, ratio); failed runs excluded.
struct SummaryRow {
  std::string method, ratio;
  std::size_t runs = 0;
  MetricCells metrics;
};

enum class ReportFormat { csv, markdown, plotdata };

std::string to_string(ReportFormat f);
ReportFormat report_format_from_string(const std::string& s);

ResultRow to_row(const RunResult& result);
std::vector<ResultRow> to_rows(std::span<const RunResult> results);

void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

// Rows appear in first-seen order of (ratio, method).
std::vector<SummaryRow> summarize(std::span<const ResultRow> rows);

std::string format_markdown(std::span<const SummaryRow> summary);

// Long form (ratio_group, class, method, f1): Adapted F1 when present,
// otherwise Out. Every ratio x class x method cell gets one row.
void write_plotdata_csv(const std::filesystem::path& path, std::span<const SummaryRow> summary);

// Writes results.csv, results.md or plotdata.csv under `dir`; returns the
// file written. Empty input is rejected.
std::filesystem::path emit_report(const std::filesystem::path& dir, std::span<const ResultRow> rows,
                                  ReportFormat format);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
};

// Records every regular file under `out_dir` (except the manifest and the
// embedding cache) with its size and content hash, sorted by path.
void write_manifest(const std::filesystem::path& out_dir, const Manifest& manifest);

std::string file_hash(const std::filesystem::path& path);

}  // namespace dcitl::experiments
