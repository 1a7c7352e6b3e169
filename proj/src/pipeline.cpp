#include "semcs/pipeline.hpp"

#include <ATen/Context.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "semcs/optimizer.hpp"

namespace semcs {

namespace {

std::string trim(std::string_view text) {
  auto begin = text.begin();
  auto end = text.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
  return {begin, end};
}

bool finite_breakdown(const LossBreakdown& loss) {
  return std::isfinite(loss.fglob) && std::isfinite(loss.bglob) && std::isfinite(loss.content) &&
         std::isfinite(loss.tv) && std::isfinite(loss.total);
}

}  // namespace

std::pair<std::string, std::string> parse_style_text(std::string_view text) {
  const auto whole = trim(text);
  if (whole.empty()) throw InvalidInput("style text must be nonempty");
  const auto at = whole.find(kStyleDelimiter);
  if (at == std::string::npos) return {whole, whole};
  auto fg = trim(std::string_view(whole).substr(0, at));
  auto bg = trim(std::string_view(whole).substr(at + kStyleDelimiter.size()));
  if (fg.empty() || bg.empty()) throw InvalidInput("both sides of '||' must name a style: \"" + whole + "\"");
  if (bg.find(kStyleDelimiter) != std::string::npos) throw InvalidInput("style text may contain at most one '||'");
  return {std::move(fg), std::move(bg)};
}

StyleTextCondition StyleTextCondition::parse(std::string_view text) {
  auto [fg, bg] = parse_style_text(text);
  StyleTextCondition condition;
  condition.raw = trim(text);
  condition.fg = std::move(fg);
  condition.bg = std::move(bg);
  return condition;
}

void TransferConfig::validate() const {
  if (iterations < 0) throw InvalidInput("iterations must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidInput("learning rate must be positive");
  if (resolution < 64) throw InvalidInput("resolution must be at least 64");
  weights.validate();
}

TransferResult run_transfer(const ContentImage& image, const StyleTextCondition& condition,
                            const TransferConfig& config, const EncoderSuite& encoders, const StepObserver& observer) {
  config.validate();
  if (condition.fg.empty() || condition.bg.empty()) throw InvalidInput("style condition has an empty side");
  at::globalContext().setDeterministicAlgorithms(true, false);
  const auto started = std::chrono::steady_clock::now();

  TransferResult result;
  result.config = config;
  result.condition = condition;

  const auto working = resize_longer_side(image, config.resolution);
  SaliencyMask working_mask;
  bool background_term = true;
  if (config.mask_free) {
    result.mask = SaliencyMask::full(image.height(), image.width());
    working_mask = SaliencyMask::full(working.height(), working.width());
    result.global_styling = true;
    background_term = false;
  } else {
    try {
      auto segmented = compute_mask(image.tensor(), *encoders.dense, config.saliency);
      working_mask = extract_salient_mask(segmented.fiedler_vector, segmented.grid, working.height(), working.width());
      if (working_mask.coverage() <= 0.0 || working_mask.coverage() >= 1.0) {
        throw DegenerateMask("salient mask vanishes at the optimization resolution");
      }
      result.mask = std::move(segmented.mask);
      result.fiedler_value = segmented.fiedler_value;
    } catch (const DegenerateMask& e) {
      if (!config.force_global) {
        throw DegenerateMask(std::string(e.what()) + " (pass --force-global to style the whole image)");
      }
      result.mask = SaliencyMask::full(image.height(), image.width());
      working_mask = SaliencyMask::full(working.height(), working.width());
      result.global_styling = true;
      background_term = false;
    }
  }

  const SemanticObjective objective(encoders, working, working_mask, condition.fg, condition.bg, config.weights,
                                    background_term);

  auto params = init_stylenet(config.seed, working.dtype());
  auto trainable = params.trainable();
  for (auto& t : trainable) t.requires_grad_(true);
  AdamState adam(trainable);
  const AdamSettings settings{.learning_rate = config.learning_rate};
  result.loss_history.reserve(static_cast<size_t>(config.iterations));

  StyleNetParams last_good = params.clone();
  for (int64_t step = 0; step < config.iterations; ++step) {
    auto output = stylize(params, working.tensor());
    const auto terms = objective.evaluate(output);
    const auto loss = terms.breakdown();
    if (!finite_breakdown(loss) || !std::isfinite(terms.total.item<double>())) {
      throw NonFiniteLoss("objective became non-finite at step " + std::to_string(step), step, last_good);
    }
    result.loss_history.push_back(loss);
    if (observer) observer(step, loss);

    last_good = params.clone();
    auto grads = torch::autograd::grad({terms.total}, trainable);
    try {
      optimization_step(trainable, grads, adam, settings);
    } catch (const NumericError& e) {
      throw NonFiniteLoss(std::string(e.what()) + " at step " + std::to_string(step), step, last_good);
    }
  }

  {
    torch::NoGradGuard no_grad;
    result.output = stylize(params, image.tensor().to(working.dtype())).detach();
  }
  result.params = params.clone();
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

LossLog::LossLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path);
  if (!out_) throw InvalidInput("cannot open loss log: " + path.string());
}

std::string LossLog::format(int64_t step, const LossBreakdown& loss) {
  std::ostringstream line;
  line << std::setprecision(17) << "{\"step\":" << step << ",\"fglob\":" << loss.fglob << ",\"bglob\":" << loss.bglob
       << ",\"content\":" << loss.content << ",\"tv\":" << loss.tv << ",\"total\":" << loss.total << "}";
  return line.str();
}

void LossLog::append(int64_t step, const LossBreakdown& loss) {
  out_ << format(step, loss) << '\n';
  out_.flush();
}

}  // namespace semcs
