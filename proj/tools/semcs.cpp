#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "semcs/evaluation.hpp"
#include "semcs/pipeline.hpp"

namespace {

struct RunFlags {
  std::string config_path;
  std::string content;
  std::string text;
  std::string out;
  std::string mask_out;
  std::string log;
  std::string checkpoint;
  std::string encoders;
  std::string weights_dir;
  int64_t iters = 0;
  double lr = 0.0;
  double lambda_bg = 0.0;
  double lambda_content = 0.0;
  double lambda_tv = 0.0;
  uint64_t seed = 0;
  int64_t resolution = 0;
  bool force_global = false;
  bool mask_free = false;
  bool quiet = false;
};

struct EvalFlags {
  std::string pairs;
  std::string report;
  int64_t top = 0;
  int64_t workers = 0;
  std::string metrics = "pretrained";
  std::string weights_dir;
};

// Config file first, then only the flags that were given on the command line.
semcs::RunRequest build_request(const RunFlags& f, const CLI::App& run) {
  semcs::RunRequest request;
  if (!f.config_path.empty()) request = semcs::load_config_file(f.config_path);
  auto given = [&](const char* name) { return run.count(name) > 0; };
  auto& c = request.config;
  if (given("--content")) request.content = f.content;
  if (given("--text")) request.text = f.text;
  if (given("--encoders")) {
    const auto dir = c.encoders.weights_dir;
    c.encoders = f.encoders == "builtin" ? semcs::EncoderConfig::builtin() : semcs::EncoderConfig::pretrained();
    c.encoders.weights_dir = dir;
  }
  if (given("--weights-dir")) c.encoders.weights_dir = f.weights_dir;
  if (given("--out")) c.output_path = f.out;
  if (given("--mask-out")) c.mask_path = f.mask_out;
  if (given("--log")) c.log_path = f.log;
  if (given("--checkpoint")) c.checkpoint_path = f.checkpoint;
  if (given("--iters")) c.iterations = f.iters;
  if (given("--lr")) c.learning_rate = f.lr;
  if (given("--lambda-bg")) c.weights.background = f.lambda_bg;
  if (given("--lambda-content")) c.weights.content = f.lambda_content;
  if (given("--lambda-tv")) c.weights.tv = f.lambda_tv;
  if (given("--seed")) c.seed = f.seed;
  if (given("--resolution")) c.resolution = f.resolution;
  if (given("--force-global")) c.force_global = true;
  if (given("--mask-free")) c.mask_free = true;
  if (request.content.empty()) throw semcs::InvalidInput("--content is required (flag or config key)");
  if (request.text.empty()) throw semcs::InvalidInput("--text is required (flag or config key)");
  if (c.output_path.empty()) c.output_path = "stylized.png";
  return request;
}

int run_command(const RunFlags& f, const CLI::App& run) {
  const auto request = build_request(f, run);
  const auto& config = request.config;
  const auto image = semcs::load_image(request.content);
  const auto condition = semcs::StyleTextCondition::parse(request.text);
  const auto encoders = semcs::load_encoders(config.encoders);

  std::optional<semcs::LossLog> log;
  if (!config.log_path.empty()) log.emplace(config.log_path);
  const int64_t every = std::max<int64_t>(1, config.iterations / 10);
  auto observer = [&](int64_t step, const semcs::LossBreakdown& loss) {
    if (log) log->append(step, loss);
    if (!f.quiet && (step % every == 0 || step + 1 == config.iterations)) {
      std::cerr << semcs::LossLog::format(step, loss) << '\n';
    }
  };

  semcs::TransferResult result;
  try {
    result = semcs::run_transfer(image, condition, config, encoders, observer);
  } catch (const semcs::NonFiniteLoss& e) {
    const auto path = config.checkpoint_path.empty() ? std::filesystem::path("last_good.ckpt") : config.checkpoint_path;
    semcs::save_checkpoint(path, e.last_good());
    std::cerr << "semcs: " << e.what() << "; last finite parameters saved to " << path << '\n';
    return 3;
  }

  semcs::save_image(config.output_path, result.output);
  if (!config.mask_path.empty()) semcs::save_gray(config.mask_path, result.mask.as_tensor(torch::kFloat32));
  if (!config.checkpoint_path.empty()) semcs::save_checkpoint(config.checkpoint_path, result.params);

  auto summary = nlohmann::json::parse(semcs::config_to_json(config));
  summary["content"] = request.content.string();
  summary["text"] = condition.raw;
  summary["fg_text"] = condition.fg;
  summary["bg_text"] = condition.bg;
  summary["architecture"] = semcs::kStyleNetArchitecture;
  summary["embedding_layer"] = encoders.image->embedding_layer();
  summary["global_styling"] = result.global_styling;
  summary["mask_coverage"] = result.mask.coverage();
  summary["fiedler_value"] = result.fiedler_value;
  summary["wall_time_seconds"] = result.wall_time_seconds;
  if (!result.loss_history.empty()) {
    summary["initial_total"] = result.loss_history.front().total;
    summary["final_total"] = result.loss_history.back().total;
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int eval_command(const EvalFlags& f, const CLI::App& eval) {
  semcs::MetricConfig metrics = f.metrics == "builtin" ? semcs::MetricConfig::builtin() : semcs::MetricConfig{};
  metrics.weights_dir = f.weights_dir;
  const auto suite = semcs::load_metrics(metrics);
  semcs::EvalOptions options;
  if (eval.count("--top") > 0) options.top = f.top;
  options.workers = f.workers;
  const auto report = semcs::batch_evaluate(semcs::read_manifest(f.pairs), suite, options);
  semcs::write_report(f.report, report);
  for (const auto& e : report.errors) {
    std::cerr << "semcs: skipped " << e.content_path << " / " << e.output_path << ": " << e.message << '\n';
  }
  std::cout << "count " << report.count() << " of " << report.considered << "  mean_dists " << report.mean_dists
            << "  mean_nima " << report.mean_nima << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-conditioned semantic style transfer"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Stylize one image");
  run->add_option("--config", rf.config_path, "JSON config; command-line flags override it")->check(CLI::ExistingFile);
  run->add_option("--content", rf.content, "Content image");
  run->add_option("--text", rf.text, "Style text; \"FG || BG\" styles object and background separately");
  run->add_option("--out", rf.out, "Stylized image (default stylized.png)");
  run->add_option("--mask-out", rf.mask_out, "Salient mask as 8-bit grayscale");
  run->add_option("--log", rf.log, "Per-step loss log (JSON lines)");
  run->add_option("--checkpoint", rf.checkpoint, "Network parameters after the run");
  run->add_option("--iters", rf.iters, "Optimization steps (default 200)");
  run->add_option("--lr", rf.lr, "Adam learning rate (default 5e-4)");
  run->add_option("--lambda-bg", rf.lambda_bg, "Background directional weight (default 1)");
  run->add_option("--lambda-content", rf.lambda_content, "Content weight (default 150)");
  run->add_option("--lambda-tv", rf.lambda_tv, "Total variation weight (default 2e-3)");
  run->add_option("--seed", rf.seed, "Network initialization seed (default 0)");
  run->add_option("--resolution", rf.resolution, "Longer side during optimization (default 512)");
  run->add_flag("--force-global", rf.force_global, "Style the whole image when no salient object is found");
  run->add_flag("--mask-free", rf.mask_free, "Skip segmentation and style the whole image");
  run->add_option("--encoders", rf.encoders, "Encoder preset")->check(CLI::IsMember({"builtin", "pretrained"}));
  run->add_option("--weights-dir", rf.weights_dir, "Directory of TorchScript exports");
  run->add_flag("--quiet", rf.quiet, "No progress on stderr");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Score stylized outputs against their content images");
  eval->add_option("--pairs", ef.pairs, "Manifest: content<TAB>output[<TAB>text] per line")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--report", ef.report, "JSON report path")->required();
  eval->add_option("--top", ef.top, "Average only the N outputs with the highest NIMA");
  eval->add_option("--workers", ef.workers, "Concurrent scoring workers (default: hardware threads)");
  eval->add_option("--metrics", ef.metrics, "Metric preset")->check(CLI::IsMember({"builtin", "pretrained"}));
  eval->add_option("--weights-dir", ef.weights_dir, "Directory of TorchScript exports");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(rf, *run);
    return eval_command(ef, *eval);
  } catch (const semcs::InvalidInput& e) {
    std::cerr << "semcs: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const semcs::ConfigurationError& e) {
    std::cerr << "semcs: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const semcs::Error& e) {
    std::cerr << "semcs: " << e.what() << '\n';
    return 3;
  }
}
