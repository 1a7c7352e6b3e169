#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include "semcs/encoders.hpp"
#include "semcs/image.hpp"
#include "semcs/spectral.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return SEMCS_TEST_DATA_DIR; }

/// 256x256 coffee cup photo.
inline semcs::ContentImage coffee() { return semcs::load_image(data_dir() / "coffee_256.png"); }

inline std::vector<std::filesystem::path> corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir() / "corpus")) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

/// Builtin suite, shared by every test in a binary.
inline const semcs::EncoderSuite& builtin_encoders() {
  static const semcs::EncoderSuite suite = semcs::load_encoders(semcs::EncoderConfig::builtin());
  return suite;
}

/// Uniform [0, 1) image from a torch generator seeded with `seed`.
inline torch::Tensor random_image(uint64_t seed, int64_t h, int64_t w, torch::ScalarType dtype = torch::kFloat64) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::rand({3, h, w}, gen, torch::TensorOptions().dtype(dtype));
}

/// Left half foreground.
inline semcs::SaliencyMask left_half(int64_t h, int64_t w) {
  std::vector<uint8_t> values(static_cast<size_t>(h * w), 0);
  for (int64_t r = 0; r < h; ++r) {
    for (int64_t c = 0; c < w / 2; ++c) values[static_cast<size_t>(r * w + c)] = 1;
  }
  return {h, w, std::move(values)};
}

}  // namespace testing_support
