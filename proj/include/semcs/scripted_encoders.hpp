#pragma once

// Adapters around TorchScript exports of pretrained networks.
//
// Export contracts (all float32, batch of one):
//   dense   : [1,3,224,224] ImageNet-normalized -> [1,T,D] or [T,D] attention keys;
//             T = grid^2 or grid^2 + 1 (leading CLS row dropped)
//   image   : [1,3,224,224] CLIP-normalized -> [1,D] pooled embedding
//   text    : [1,77] int64 CLIP token ids -> [1,D]
//   content : [1,3,H,W] ImageNet-normalized -> tuple/list of feature maps, one per layer

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "semcs/encoders.hpp"

namespace semcs::scripted {

struct WeightSpec {
  std::string id;
  std::string file;
};

/// Known model ids and the weight file each expects under the weights directory.
const std::vector<WeightSpec>& dense_models();
const std::vector<WeightSpec>& image_models();
const std::vector<WeightSpec>& text_models();
const std::vector<WeightSpec>& content_models();

/// Vocabulary file expected next to the text encoder export.
inline constexpr const char* kTokenizerVocabFile = "bpe_simple_vocab_16e6.txt";

std::shared_ptr<const DenseFeatureExtractor> load_dense_extractor(const std::string& id,
                                                                  const std::filesystem::path& dir);
std::shared_ptr<const ImageEncoder> load_image_encoder(const std::string& id, const std::filesystem::path& dir);
std::shared_ptr<const TextEncoder> load_text_encoder(const std::string& id, const std::filesystem::path& dir);
std::shared_ptr<const ContentFeatureExtractor> load_content_extractor(const std::string& id,
                                                                      const std::filesystem::path& dir);

/// Resolves `id` against `models`, checks the file exists, and returns its path.
/// Throws ConfigurationError naming the expected file otherwise.
std::filesystem::path require_weight_file(const std::vector<WeightSpec>& models, const std::string& id,
                                          const std::filesystem::path& dir, const std::string& kind);

/// ImageNet / CLIP input normalization on a [N,3,H,W] tensor.
torch::Tensor imagenet_normalize(const torch::Tensor& batched);
torch::Tensor clip_normalize(const torch::Tensor& batched);

}  // namespace semcs::scripted
