#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semcs/metrics.hpp"
#include "semcs/pipeline.hpp"

namespace semcs {

struct EvalPair {
  std::filesystem::path content_path;
  std::filesystem::path output_path;
  std::string text;  // optional style text, empty when unknown
};

struct EvalRecord {
  std::filesystem::path content_path;
  std::filesystem::path output_path;
  double dists = 0.0;  // [0, 1]
  double nima = 1.0;   // [1, 10]
  std::optional<StyleTextCondition> condition;
};

/// A pair that could not be scored; the batch continues without it.
struct EvalError {
  std::filesystem::path content_path;
  std::filesystem::path output_path;
  std::string message;
};

struct EvalReport {
  std::string dists_model;
  std::string nima_model;
  std::vector<EvalRecord> records;  // the averaged records, manifest order unless top-N applied
  std::vector<EvalError> errors;
  int64_t considered = 0;  // records scored before any top-N selection
  double mean_dists = 0.0;
  double mean_nima = 0.0;

  [[nodiscard]] int64_t count() const noexcept { return static_cast<int64_t>(records.size()); }
};

/// Arithmetic means over `records`, summed in order.
std::pair<double, double> record_means(const std::vector<EvalRecord>& records);

/// One pair per line: content<TAB>output[<TAB>text]. Blank lines and lines
/// starting with '#' are skipped; relative paths resolve against the
/// manifest's directory.
std::vector<EvalPair> read_manifest(const std::filesystem::path& manifest);

struct EvalOptions {
  /// Keep only the N records with the highest NIMA before averaging.
  std::optional<int64_t> top;
  /// Concurrent scoring workers; 0 picks the hardware concurrency.
  int64_t workers = 0;
};

/// Scores every pair (dims of content and output must match). Unreadable or
/// mismatched pairs become EvalError entries. Throws InvalidInput on an empty
/// list or when no pair could be scored.
EvalReport batch_evaluate(const std::vector<EvalPair>& pairs, const MetricSuite& metrics,
                          const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace semcs
