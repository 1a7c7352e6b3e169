#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include <torch/torch.h>

namespace semcs {

/// Throws InvalidInput unless `chw` is a finite [3, H, W] floating tensor.
/// Range is checked only when `check_range` is set.
void check_image_tensor(const torch::Tensor& chw, std::string_view what, bool check_range = true);

/// Validated RGB image in channel-first layout with values in [0, 1].
///
/// The tensor is held by value; torch tensors share storage, so callers that
/// need an independent copy must clone. The library never writes into it.
class ContentImage {
 public:
  explicit ContentImage(torch::Tensor chw);

  [[nodiscard]] const torch::Tensor& tensor() const noexcept { return pixels_; }
  [[nodiscard]] int64_t height() const noexcept { return pixels_.size(1); }
  [[nodiscard]] int64_t width() const noexcept { return pixels_.size(2); }
  [[nodiscard]] torch::ScalarType dtype() const noexcept { return pixels_.scalar_type(); }

  /// Same pixels in another floating dtype.
  [[nodiscard]] ContentImage to(torch::ScalarType dtype) const;

 private:
  torch::Tensor pixels_;
};

/// Differentiable bilinear resize of a [3, H, W] or [N, C, H, W] tensor.
/// Antialiasing is enabled when shrinking.
torch::Tensor resize_bilinear(const torch::Tensor& image, int64_t height, int64_t width);

/// Scales so the longer side equals `longer_side`, keeping the aspect ratio.
ContentImage resize_longer_side(const ContentImage& image, int64_t longer_side);

/// Reads an 8-bit image from disk as float32 RGB.
ContentImage load_image(const std::filesystem::path& path);

/// Writes a [3, H, W] tensor in [0, 1] as 8-bit RGB. Format follows the extension.
void save_image(const std::filesystem::path& path, const torch::Tensor& chw);

/// Writes a [H, W] tensor as 8-bit single-channel (values scaled by 255).
void save_gray(const std::filesystem::path& path, const torch::Tensor& hw);

}  // namespace semcs
