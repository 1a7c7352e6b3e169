#pragma once

// Deterministic in-process encoders. They need no weight files, run in any
// floating dtype, and back every adapter interface so the full pipeline can
// run offline. They are not substitutes for the pretrained models' semantics.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "semcs/encoders.hpp"

namespace semcs::builtin {

/// Named reference colors shared by the image and text sides of the concept space.
struct PaletteColor {
  const char* name;
  std::array<double, 3> rgb;
};

inline constexpr std::array<PaletteColor, 14> kPalette{{
    {"black", {0.05, 0.05, 0.05}},
    {"white", {0.95, 0.95, 0.95}},
    {"gray", {0.50, 0.50, 0.50}},
    {"red", {0.80, 0.10, 0.10}},
    {"orange", {0.95, 0.55, 0.10}},
    {"yellow", {0.95, 0.85, 0.20}},
    {"green", {0.20, 0.60, 0.20}},
    {"blue", {0.15, 0.30, 0.80}},
    {"sky", {0.55, 0.75, 0.95}},
    {"purple", {0.50, 0.20, 0.60}},
    {"pink", {0.95, 0.60, 0.75}},
    {"brown", {0.45, 0.28, 0.15}},
    {"tan", {0.85, 0.70, 0.50}},
    {"navy", {0.10, 0.12, 0.35}},
}};

/// Texture slots: fine detail, coarse detail, saturation, brightness.
inline constexpr int64_t kTextureDims = 4;
/// Slots reachable only from text (hashed out-of-vocabulary words).
inline constexpr int64_t kHashDims = 16;
inline constexpr int64_t kConceptDim = static_cast<int64_t>(kPalette.size()) + kTextureDims + kHashDims;

/// Patch descriptors (opponent color, contrast, gradient energy) pooled at
/// three neighbourhood sizes, standardized over the image with a constant bias
/// column. Stride 8 on a 224 px square.
class PatchDescriptorExtractor final : public DenseFeatureExtractor {
 public:
  [[nodiscard]] std::string id() const override { return "builtin"; }
  [[nodiscard]] int64_t patch_stride() const override { return 8; }
  [[nodiscard]] int64_t input_size() const override { return 224; }

 protected:
  [[nodiscard]] torch::Tensor compute(const torch::Tensor& batched) const override;
};

/// Soft palette histogram plus texture statistics, zero on the hashed slots.
class ConceptImageEncoder final : public ImageEncoder {
 public:
  [[nodiscard]] std::string id() const override { return "builtin"; }
  [[nodiscard]] int64_t dim() const override { return kConceptDim; }
  [[nodiscard]] std::string embedding_layer() const override { return "concept-histogram"; }

  static constexpr int64_t kInputSize = 224;
  static constexpr double kTemperature = 0.02;

 protected:
  [[nodiscard]] torch::Tensor compute(const torch::Tensor& image) const override;
};

/// Bag-of-words over a color/texture lexicon. Unknown words hash to a fixed
/// gaussian direction in the text-only slots.
class LexiconTextEncoder final : public TextEncoder {
 public:
  [[nodiscard]] std::string id() const override { return "builtin"; }
  [[nodiscard]] int64_t dim() const override { return kConceptDim; }

  /// Lowercased alphanumeric tokens with stopwords removed.
  [[nodiscard]] static std::vector<std::string> tokenize(const std::string& text);
  [[nodiscard]] static bool in_lexicon(const std::string& word);

 protected:
  [[nodiscard]] torch::Tensor compute(const std::string& text) const override;
};

/// Four conv+ReLU stages with seeded gaussian weights and 2x average pooling
/// between them. Taps are named by stride: "s1", "s2", "s4", "s8".
class RandomConvBackbone {
 public:
  explicit RandomConvBackbone(uint64_t seed = kDefaultSeed);

  /// `image` is [3, H, W] or [N, 3, H, W] in [0, 1]; returns the four taps in order.
  [[nodiscard]] std::vector<torch::Tensor> forward(const torch::Tensor& image) const;

  [[nodiscard]] static std::vector<std::string> tap_names() { return {"s1", "s2", "s4", "s8"}; }
  [[nodiscard]] static std::vector<int64_t> tap_strides() { return {1, 2, 4, 8}; }
  [[nodiscard]] static std::vector<int64_t> tap_channels() { return {24, 48, 64, 96}; }

  static constexpr uint64_t kDefaultSeed = 0x5e3c5ULL;

 private:
  std::vector<torch::Tensor> weights_;  // float64
};

/// Content features from the "s4" and "s8" taps of RandomConvBackbone.
class RandomConvContentExtractor final : public ContentFeatureExtractor {
 public:
  /// Scales both taps so that, at the default content weight, structure is
  /// kept while the directional terms still move the colors.
  static constexpr double kFeatureGain = 0.1;

  [[nodiscard]] std::string id() const override { return "builtin"; }
  [[nodiscard]] std::vector<std::string> layer_names() const override { return {"s4", "s8"}; }
  [[nodiscard]] std::vector<int64_t> layer_strides() const override { return {4, 8}; }

 protected:
  [[nodiscard]] ContentFeatureSet compute(const torch::Tensor& image) const override;

 private:
  RandomConvBackbone backbone_;
};

}  // namespace semcs::builtin
