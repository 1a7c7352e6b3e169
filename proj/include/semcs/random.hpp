#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace semcs {

/// Platform-stable normal sampler. std::normal_distribution is
/// implementation-defined, so Box-Muller is done by hand on top of mt19937_64.
class StableNormal {
 public:
  explicit StableNormal(uint64_t seed) : engine_(seed) {}

  double uniform();  // in (0, 1)
  double operator()();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Tensor of i.i.d. N(0, stddev^2) draws in double precision.
torch::Tensor stable_normal_tensor(StableNormal& rng, std::vector<int64_t> shape, double stddev);

/// 64-bit FNV-1a.
uint64_t fnv1a(std::string_view text) noexcept;

}  // namespace semcs
