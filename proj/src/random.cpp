#include "semcs/random.hpp"

#include <cmath>
#include <numbers>

namespace semcs {

double StableNormal::uniform() {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double StableNormal::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

torch::Tensor stable_normal_tensor(StableNormal& rng, std::vector<int64_t> shape, double stddev) {
  auto out = torch::empty(shape, torch::kFloat64);
  auto* data = out.data_ptr<double>();
  for (int64_t i = 0; i < out.numel(); ++i) data[i] = rng() * stddev;
  return out;
}

uint64_t fnv1a(std::string_view text) noexcept {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace semcs
