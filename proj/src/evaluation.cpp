#include "semcs/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <thread>
#include <variant>

#include "json.hpp"
#include "semcs/error.hpp"

namespace semcs {

namespace {

using Outcome = std::variant<EvalRecord, EvalError>;

Outcome score_pair(const EvalPair& pair, const MetricSuite& metrics) {
  try {
    const auto content = load_image(pair.content_path);
    const auto output = load_image(pair.output_path);
    EvalRecord record;
    record.content_path = pair.content_path;
    record.output_path = pair.output_path;
    record.dists = dists_score(*metrics.dists, content, output.tensor());
    record.nima = nima_score(*metrics.nima, output.tensor());
    if (!pair.text.empty()) record.condition = StyleTextCondition::parse(pair.text);
    return record;
  } catch (const Error& e) {
    return EvalError{pair.content_path, pair.output_path, e.what()};
  } catch (const c10::Error& e) {
    return EvalError{pair.content_path, pair.output_path, e.what_without_backtrace()};
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::pair<double, double> record_means(const std::vector<EvalRecord>& records) {
  if (records.empty()) return {0.0, 0.0};
  double dists = 0.0;
  double nima = 0.0;
  for (const auto& r : records) {
    dists += r.dists;
    nima += r.nima;
  }
  const auto n = static_cast<double>(records.size());
  return {dists / n, nima / n};
}

std::vector<EvalPair> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw InvalidInput("cannot read manifest: " + manifest.string());
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
  };
  std::vector<EvalPair> pairs;
  std::string line;
  for (int64_t number = 1; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty()) {
      throw InvalidInput(manifest.string() + ":" + std::to_string(number) +
                         ": expected content<TAB>output[<TAB>text]");
    }
    pairs.push_back({resolve(fields[0]), resolve(fields[1]), fields.size() == 3 ? fields[2] : std::string()});
  }
  return pairs;
}

EvalReport batch_evaluate(const std::vector<EvalPair>& pairs, const MetricSuite& metrics,
                          const EvalOptions& options) {
  if (pairs.empty()) throw InvalidInput("evaluation needs at least one pair");
  if (!metrics.dists || !metrics.nima) throw ConfigurationError("metric suite is incomplete");
  if (options.top && *options.top < 1) throw InvalidInput("--top must be at least 1");

  int64_t workers = options.workers > 0 ? options.workers
                                        : static_cast<int64_t>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int64_t>(workers, static_cast<int64_t>(pairs.size()));

  std::vector<std::optional<Outcome>> outcomes(pairs.size());
  std::atomic<size_t> next{0};
  std::vector<std::future<void>> running;
  for (int64_t w = 0; w < workers; ++w) {
    running.push_back(std::async(std::launch::async, [&] {
      for (size_t i = next++; i < pairs.size(); i = next++) outcomes[i] = score_pair(pairs[i], metrics);
    }));
  }
  for (auto& f : running) f.get();

  EvalReport report;
  report.dists_model = metrics.dists->id();
  report.nima_model = metrics.nima->id();
  for (auto& outcome : outcomes) {
    if (auto* record = std::get_if<EvalRecord>(&*outcome)) {
      report.records.push_back(std::move(*record));
    } else {
      report.errors.push_back(std::get<EvalError>(std::move(*outcome)));
    }
  }
  if (report.records.empty()) {
    throw InvalidInput("no pair could be scored; first error: " + report.errors.front().message);
  }
  report.considered = report.count();
  if (options.top && *options.top < report.count()) {
    std::stable_sort(report.records.begin(), report.records.end(),
                     [](const EvalRecord& a, const EvalRecord& b) { return a.nima > b.nima; });
    report.records.resize(static_cast<size_t>(*options.top));
  }
  std::tie(report.mean_dists, report.mean_nima) = record_means(report.records);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  json records = json::array();
  for (const auto& r : report.records) {
    json entry = {{"content_path", r.content_path.string()},
                  {"output_path", r.output_path.string()},
                  {"dists", r.dists},
                  {"nima", r.nima}};
    if (r.condition) {
      entry["condition"] = {{"text", r.condition->raw}, {"fg", r.condition->fg}, {"bg", r.condition->bg}};
    }
    records.push_back(std::move(entry));
  }
  json errors = json::array();
  for (const auto& e : report.errors) {
    errors.push_back(
        {{"content_path", e.content_path.string()}, {"output_path", e.output_path.string()}, {"error", e.message}});
  }
  json doc = {{"dists_model", report.dists_model},
              {"nima_model", report.nima_model},
              {"considered", report.considered},
              {"count", report.count()},
              {"mean_dists", report.mean_dists},
              {"mean_nima", report.mean_nima},
              {"records", std::move(records)},
              {"errors", std::move(errors)}};
  return doc.dump(2);
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write report: " + path.string());
  out << report_to_json(report) << '\n';
}

}  // namespace semcs
