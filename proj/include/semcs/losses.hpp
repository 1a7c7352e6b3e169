#pragma once

#include <string>
#include <string_view>

#include <torch/torch.h>

#include "semcs/encoders.hpp"
#include "semcs/image.hpp"
#include "semcs/spectral.hpp"

namespace semcs {

/// Source text every style direction is measured from.
inline constexpr std::string_view kSourceText = "Photo";

enum class DirectionKind { fg_text, fg_image, bg_text, bg_image };

/// Difference of two unit embeddings; not unit norm itself.
struct DirectionVector {
  torch::Tensor values;  // [dim]
  DirectionKind kind = DirectionKind::fg_text;

  [[nodiscard]] double norm() const { return values.detach().norm().item<double>(); }
};

struct LossWeights {
  double background = 1.0;  // lambda_bg
  double content = 150.0;   // lambda_c
  double tv = 2e-3;         // lambda_tv

  /// Throws InvalidInput on any negative or non-finite weight.
  void validate() const;
};

/// Scalar value of every objective term for one evaluation.
struct LossBreakdown {
  double fglob = 0.0;
  double bglob = 0.0;
  double content = 0.0;
  double tv = 0.0;
  double total = 0.0;
  LossWeights weights;
};

/// total = fglob + lambda_bg * bglob + lambda_c * content + lambda_tv * tv.
LossBreakdown compose_total(double fglob, double bglob, double content, double tv, const LossWeights& weights);

/// E_T(style) - E_T(source).
DirectionVector text_direction(const TextEncoder& encoder, std::string_view style,
                               std::string_view source = kSourceText,
                               DirectionKind kind = DirectionKind::fg_text);

/// E_I(part) - E_I(content). `part` may require grad.
DirectionVector image_direction(const ImageEncoder& encoder, const torch::Tensor& part, const ContentImage& content,
                                DirectionKind kind = DirectionKind::fg_image);

/// Degenerate-direction threshold: below this norm a direction counts as zero.
inline constexpr double kDirectionEpsilon = 1e-8;

/// 1 - cos(image_dir, text_dir); defined as 1 when either norm is below
/// kDirectionEpsilon. Differentiable w.r.t. `image_dir`.
torch::Tensor directional_loss(const torch::Tensor& image_dir, const torch::Tensor& text_dir);
double directional_loss(const DirectionVector& image_dir, const DirectionVector& text_dir);

/// Directional loss of Mask (.) output against the foreground text.
torch::Tensor global_foreground_loss(const EncoderSuite& encoders, const torch::Tensor& output,
                                     const ContentImage& content, const SaliencyMask& mask, std::string_view fg_text);

/// Directional loss of (1 - Mask) (.) output against the background text.
torch::Tensor global_background_loss(const EncoderSuite& encoders, const torch::Tensor& output,
                                     const ContentImage& content, const SaliencyMask& mask, std::string_view bg_text);

/// Sum over configured layers of the per-layer feature MSE.
torch::Tensor content_loss(const ContentFeatureExtractor& extractor, const torch::Tensor& output,
                           const ContentImage& content);
torch::Tensor content_loss(const ContentFeatureSet& output_features, const ContentFeatureSet& content_features);

/// mean(horizontal diff^2) + mean(vertical diff^2) over all channels of a
/// [C, H, W] tensor. A direction with no neighbour pairs contributes 0.
torch::Tensor tv_loss(const torch::Tensor& output);

/// Differentiable objective terms; `breakdown()` reads them out as doubles.
struct ObjectiveTerms {
  torch::Tensor fglob;
  torch::Tensor bglob;
  torch::Tensor content;
  torch::Tensor tv;
  torch::Tensor total;
  LossWeights weights;

  [[nodiscard]] LossBreakdown breakdown() const;
};

/// Full objective for one content image with every output-independent
/// quantity (content embedding, text directions, content features, mask
/// tensors) computed once up front.
class SemanticObjective {
 public:
  /// `background_term` off: the background loss is skipped and reported as 0
  /// (whole-image styling). Otherwise the mask must have 0 < coverage < 1.
  SemanticObjective(EncoderSuite encoders, ContentImage content, SaliencyMask mask, std::string fg_text,
                    std::string bg_text, LossWeights weights, bool background_term = true);

  [[nodiscard]] ObjectiveTerms evaluate(const torch::Tensor& output) const;

  [[nodiscard]] const DirectionVector& fg_text_direction() const noexcept { return fg_text_dir_; }
  [[nodiscard]] const DirectionVector& bg_text_direction() const noexcept { return bg_text_dir_; }
  [[nodiscard]] const SaliencyMask& mask() const noexcept { return mask_; }

 private:
  EncoderSuite encoders_;
  ContentImage content_;
  SaliencyMask mask_;
  LossWeights weights_;
  bool background_term_;
  torch::Tensor fg_mask_;  // [1, H, W] in the content dtype
  torch::Tensor bg_mask_;
  torch::Tensor content_embedding_;
  DirectionVector fg_text_dir_;
  DirectionVector bg_text_dir_;
  ContentFeatureSet content_features_;
};

/// Throws InvalidInput unless 0 < coverage < 1 and dims match the image.
void check_partition_mask(const SaliencyMask& mask, int64_t height, int64_t width);

}  // namespace semcs
