#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "semcs/encoders.hpp"
#include "semcs/error.hpp"
#include "semcs/image.hpp"
#include "semcs/losses.hpp"
#include "semcs/spectral.hpp"
#include "semcs/style_network.hpp"

namespace semcs {

/// Separates foreground and background style texts.
inline constexpr std::string_view kStyleDelimiter = "||";

/// Splits on "||" into trimmed (foreground, background); without the
/// delimiter both sides are the whole (trimmed) text.
std::pair<std::string, std::string> parse_style_text(std::string_view text);

struct StyleTextCondition {
  std::string raw;
  std::string fg;
  std::string bg;
  std::string src{kSourceText};

  static StyleTextCondition parse(std::string_view text);
  [[nodiscard]] bool double_text() const { return raw.find(kStyleDelimiter) != std::string::npos; }
};

struct TransferConfig {
  int64_t iterations = 200;
  double learning_rate = 5e-4;
  LossWeights weights;
  uint64_t seed = 0;
  int64_t resolution = 512;  // longer side during optimization
  EncoderConfig encoders;
  SaliencyParams saliency;
  /// Style the whole image with the foreground text when the mask is degenerate.
  bool force_global = false;
  /// Skip segmentation entirely: whole-image mask, no background term.
  bool mask_free = false;

  std::filesystem::path output_path;
  std::filesystem::path mask_path;
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_path;

  /// Throws InvalidInput on iterations < 0, learning_rate <= 0, resolution < 64
  /// or negative weights.
  void validate() const;
};

struct TransferResult {
  torch::Tensor output;  // [3, H, W] at the input resolution
  SaliencyMask mask;     // at the input resolution
  std::vector<LossBreakdown> loss_history;
  TransferConfig config;
  StyleTextCondition condition;
  StyleNetParams params;
  double wall_time_seconds = 0.0;
  double fiedler_value = 0.0;
  bool global_styling = false;
};

/// Raised when the objective or its gradient stops being finite. Carries the
/// parameters from the last step whose loss was finite.
class NonFiniteLoss : public NumericError {
 public:
  NonFiniteLoss(const std::string& message, int64_t step, StyleNetParams last_good)
      : NumericError(message), step_(step), last_good_(std::move(last_good)) {}

  [[nodiscard]] int64_t step() const noexcept { return step_; }
  [[nodiscard]] const StyleNetParams& last_good() const noexcept { return last_good_; }

 private:
  int64_t step_;
  StyleNetParams last_good_;
};

using StepObserver = std::function<void(int64_t step, const LossBreakdown&)>;

/// Segments once, then optimizes a freshly seeded stylization network.
/// Deterministic for a fixed seed.
TransferResult run_transfer(const ContentImage& image, const StyleTextCondition& condition,
                            const TransferConfig& config, const EncoderSuite& encoders,
                            const StepObserver& observer = {});

/// Line-delimited JSON loss log, one record per optimization step.
class LossLog {
 public:
  explicit LossLog(const std::filesystem::path& path);
  void append(int64_t step, const LossBreakdown& loss);

  [[nodiscard]] static std::string format(int64_t step, const LossBreakdown& loss);

 private:
  std::ofstream out_;
};

/// A run as requested from the command line or a config document.
struct RunRequest {
  std::filesystem::path content;
  std::string text;
  TransferConfig config;
};

/// Applies a JSON config document on top of `base`. Keys mirror the CLI flags
/// ("iters", "lambda-bg", ...) plus "encoders" and "saliency" objects.
/// Unknown keys raise ConfigurationError.
RunRequest apply_config_document(std::string_view json_text, RunRequest base = {});
RunRequest load_config_file(const std::filesystem::path& path, RunRequest base = {});

/// JSON echo of the effective configuration.
std::string config_to_json(const TransferConfig& config);

}  // namespace semcs
