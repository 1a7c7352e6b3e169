#include "semcs/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include "semcs/error.hpp"

namespace semcs {

namespace F = torch::nn::functional;

void check_image_tensor(const torch::Tensor& chw, std::string_view what, bool check_range) {
  const std::string name(what);
  if (!chw.defined()) throw InvalidInput(name + ": undefined tensor");
  if (chw.dim() != 3 || chw.size(0) != 3) {
    throw InvalidInput(name + ": expected a [3, H, W] tensor, got " + std::to_string(chw.dim()) + " dims");
  }
  if (!chw.is_floating_point()) throw InvalidInput(name + ": expected floating-point pixels");
  if (chw.size(1) < 1 || chw.size(2) < 1) throw InvalidInput(name + ": empty image");
  const auto values = chw.detach();
  if (!torch::isfinite(values).all().item<bool>()) throw InvalidInput(name + ": non-finite pixel values");
  if (check_range) {
    const double lo = values.min().item<double>();
    const double hi = values.max().item<double>();
    if (lo < 0.0 || hi > 1.0) {
      throw InvalidInput(name + ": pixel values outside [0, 1] (min " + std::to_string(lo) + ", max " +
                         std::to_string(hi) + ")");
    }
  }
}

ContentImage::ContentImage(torch::Tensor chw) : pixels_(std::move(chw)) {
  check_image_tensor(pixels_, "content image");
}

ContentImage ContentImage::to(torch::ScalarType dtype) const { return ContentImage(pixels_.to(dtype)); }

torch::Tensor resize_bilinear(const torch::Tensor& image, int64_t height, int64_t width) {
  const bool unbatched = image.dim() == 3;
  auto batched = unbatched ? image.unsqueeze(0) : image;
  if (batched.size(2) == height && batched.size(3) == width) return image;
  const bool shrinking = height < batched.size(2) || width < batched.size(3);
  auto out = F::interpolate(batched, F::InterpolateFuncOptions()
                                         .size(std::vector<int64_t>{height, width})
                                         .mode(torch::kBilinear)
                                         .align_corners(false)
                                         .antialias(shrinking));
  return unbatched ? out.squeeze(0) : out;
}

ContentImage resize_longer_side(const ContentImage& image, int64_t longer_side) {
  const int64_t h = image.height();
  const int64_t w = image.width();
  const int64_t longest = std::max(h, w);
  if (longest == longer_side) return image;
  const double scale = static_cast<double>(longer_side) / static_cast<double>(longest);
  const auto nh = std::max<int64_t>(1, static_cast<int64_t>(std::lround(h * scale)));
  const auto nw = std::max<int64_t>(1, static_cast<int64_t>(std::lround(w * scale)));
  return ContentImage(resize_bilinear(image.tensor(), nh, nw).clamp(0.0, 1.0));
}

ContentImage load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw InvalidInput("cannot read image: " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return ContentImage(hwc.permute({2, 0, 1}).contiguous().to(torch::kFloat32).div_(255.0));
}

namespace {

void write_mat(const std::filesystem::path& path, const cv::Mat& mat) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) throw InvalidInput("cannot write image: " + path.string());
}

torch::Tensor to_bytes(const torch::Tensor& t) {
  return t.detach().to(torch::kFloat64).clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).contiguous();
}

}  // namespace

void save_image(const std::filesystem::path& path, const torch::Tensor& chw) {
  check_image_tensor(chw, "output image", false);
  auto hwc = to_bytes(chw).permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), CV_8UC3, hwc.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  write_mat(path, bgr);
}

void save_gray(const std::filesystem::path& path, const torch::Tensor& hw) {
  if (hw.dim() != 2) throw InvalidInput("grayscale export expects a [H, W] tensor");
  auto bytes = to_bytes(hw);
  cv::Mat gray(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC1, bytes.data_ptr<uint8_t>());
  write_mat(path, gray.clone());
}

}  // namespace semcs
