#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace semcs {

struct AdamSettings {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates, one pair per parameter tensor.
struct AdamState {
  int64_t steps = 0;
  std::vector<torch::Tensor> first_moment;
  std::vector<torch::Tensor> second_moment;

  explicit AdamState(const std::vector<torch::Tensor>& params);
};

/// One bias-corrected Adam update applied in place to `params`.
/// Throws NumericError (before touching anything) if a gradient is not finite.
void optimization_step(const std::vector<torch::Tensor>& params, const std::vector<torch::Tensor>& grads,
                       AdamState& state, const AdamSettings& settings);

}  // namespace semcs
