#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace semcs {

/// One convolution of the stylization network.
struct ConvSpec {
  std::string name;
  int64_t in_channels;
  int64_t out_channels;
  int64_t kernel;
  int64_t stride;
};

/// Trainable parameters of the per-image stylization network.
/// Tensors are stored in architecture order: "<conv>.weight", "<conv>.bias".
struct StyleNetParams {
  std::vector<std::pair<std::string, torch::Tensor>> tensors;
  uint64_t seed = 0;
  std::string architecture_id;

  [[nodiscard]] int64_t parameter_count() const;
  [[nodiscard]] std::vector<torch::Tensor> trainable() const;
  [[nodiscard]] const torch::Tensor& get(const std::string& name) const;
  /// Deep copy with autograd history dropped.
  [[nodiscard]] StyleNetParams clone() const;
  [[nodiscard]] StyleNetParams to(torch::ScalarType dtype) const;
};

/// U-Net: three stride-2 stages, two residual blocks at 1/8 resolution, three
/// bilinear upsampling stages with skip connections, sigmoid output.
inline constexpr const char* kStyleNetArchitecture = "unet3-res2-c16";
inline constexpr int64_t kStyleNetDownsampling = 8;

/// Layer table of the architecture, in parameter order.
const std::vector<ConvSpec>& stylenet_layers();

/// He-uniform weights and zero biases from a platform-stable seeded generator.
StyleNetParams init_stylenet(uint64_t seed, torch::ScalarType dtype = torch::kFloat32);

/// Stylizes a [3, H, W] image. Sides that are not multiples of 8 are
/// reflect-padded internally and cropped back. Output is in [0, 1].
torch::Tensor stylize(const StyleNetParams& params, const torch::Tensor& image);

/// Binary checkpoint: magic, version, architecture id, seed, named tensors.
void save_checkpoint(const std::filesystem::path& path, const StyleNetParams& params);
StyleNetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace semcs
