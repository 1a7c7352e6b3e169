#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace semcs {

/// Patch-level features of one image, one row per patch in row-major grid order.
struct DenseFeatureMap {
  int64_t grid_h = 0;
  int64_t grid_w = 0;
  torch::Tensor features;  // [grid_h * grid_w, dim], float64
  int64_t image_h = 0;
  int64_t image_w = 0;
  bool normalized = false;  // rows have unit L2 norm

  [[nodiscard]] int64_t rows() const noexcept { return grid_h * grid_w; }
  [[nodiscard]] int64_t dim() const { return features.size(1); }
};

enum class Modality { image, text };

/// Unit-norm vector in the joint image-text space. `values` may carry autograd history.
struct Embedding {
  torch::Tensor values;  // [dim]
  Modality modality = Modality::image;

  [[nodiscard]] int64_t dim() const { return values.size(0); }
};

/// Named activations of a frozen perceptual network, in configured layer order.
struct ContentFeatureSet {
  std::vector<std::pair<std::string, torch::Tensor>> layers;
};

/// Dense feature extractor (the segmentation backbone).
class DenseFeatureExtractor {
 public:
  virtual ~DenseFeatureExtractor() = default;

  /// Validates the image (each side >= 64 px, values in [0, 1]) and returns patch features.
  [[nodiscard]] DenseFeatureMap extract_dense_features(const torch::Tensor& image) const;

  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int64_t patch_stride() const = 0;
  /// Square side the adapter resizes to before running the backbone.
  [[nodiscard]] virtual int64_t input_size() const = 0;

 protected:
  /// `batched` is [1, 3, input_size, input_size]; returns [grid_h * grid_w, dim].
  [[nodiscard]] virtual torch::Tensor compute(const torch::Tensor& batched) const = 0;
  [[nodiscard]] virtual bool normalizes_rows() const { return false; }
};

/// Image side of the joint embedding space. Differentiable w.r.t. its input.
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;

  [[nodiscard]] Embedding encode_image(const torch::Tensor& image) const;

  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int64_t dim() const = 0;
  /// Which activation is exposed as the embedding.
  [[nodiscard]] virtual std::string embedding_layer() const = 0;

 protected:
  /// `image` is [3, H, W] in [0, 1]; returns an unnormalized [dim] vector.
  [[nodiscard]] virtual torch::Tensor compute(const torch::Tensor& image) const = 0;
};

/// Text side of the joint embedding space.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;

  [[nodiscard]] Embedding encode_text(std::string_view text) const;

  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual int64_t dim() const = 0;

 protected:
  /// `text` is trimmed and nonempty; returns an unnormalized [dim] float64 vector.
  [[nodiscard]] virtual torch::Tensor compute(const std::string& text) const = 0;
};

/// Perceptual feature extractor for the content term. Differentiable w.r.t. its input.
class ContentFeatureExtractor {
 public:
  virtual ~ContentFeatureExtractor() = default;

  [[nodiscard]] ContentFeatureSet extract_content_features(const torch::Tensor& image) const;

  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual std::vector<std::string> layer_names() const = 0;
  [[nodiscard]] virtual std::vector<int64_t> layer_strides() const = 0;

 protected:
  [[nodiscard]] virtual ContentFeatureSet compute(const torch::Tensor& image) const = 0;
};

/// Model ids and weight location for the four adapters.
///
/// "builtin" selects the deterministic in-process encoders; any other id is a
/// pretrained TorchScript export looked up under `weights_dir`.
struct EncoderConfig {
  std::string dense = "dino-vits8";
  std::string image = "clip-rn50-softmax3d";
  std::string text = "clip-text";
  std::string content = "vgg19";
  std::filesystem::path weights_dir;  // empty: $SEMCS_WEIGHTS_DIR, then ./weights

  static EncoderConfig builtin();
  static EncoderConfig pretrained();
};

/// Resolves the weight directory: explicit config, then SEMCS_WEIGHTS_DIR, then "weights".
std::filesystem::path resolve_weights_dir(const std::filesystem::path& configured);

/// Immutable, shareable set of frozen adapters.
struct EncoderSuite {
  std::shared_ptr<const DenseFeatureExtractor> dense;
  std::shared_ptr<const ImageEncoder> image;
  std::shared_ptr<const TextEncoder> text;
  std::shared_ptr<const ContentFeatureExtractor> content;
};

/// Builds every adapter named in `config`.
/// Throws ConfigurationError for unknown ids, missing weight files, or
/// image/text embedding dims that disagree.
EncoderSuite load_encoders(const EncoderConfig& config);

std::shared_ptr<const DenseFeatureExtractor> make_dense_extractor(const std::string& id,
                                                                  const std::filesystem::path& weights_dir);
std::shared_ptr<const ImageEncoder> make_image_encoder(const std::string& id, const std::filesystem::path& weights_dir);
std::shared_ptr<const TextEncoder> make_text_encoder(const std::string& id, const std::filesystem::path& weights_dir);
std::shared_ptr<const ContentFeatureExtractor> make_content_extractor(const std::string& id,
                                                                      const std::filesystem::path& weights_dir);

/// Cosine similarity of two embeddings as a plain double.
double cosine(const Embedding& a, const Embedding& b);

}  // namespace semcs
