#include "semcs/optimizer.hpp"

#include <cmath>

#include "semcs/error.hpp"

namespace semcs {

AdamState::AdamState(const std::vector<torch::Tensor>& params) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.push_back(torch::zeros_like(p.detach()));
    second_moment.push_back(torch::zeros_like(p.detach()));
  }
}

void optimization_step(const std::vector<torch::Tensor>& params, const std::vector<torch::Tensor>& grads,
                       AdamState& state, const AdamSettings& settings) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw InvalidInput("parameter, gradient and optimizer state counts differ");
  }
  if (!(settings.learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].defined()) throw NumericError("missing gradient for parameter " + std::to_string(i));
    if (!torch::isfinite(grads[i]).all().item<bool>()) {
      throw NumericError("non-finite gradient for parameter " + std::to_string(i));
    }
  }

  torch::NoGradGuard no_grad;
  state.steps += 1;
  const double t = static_cast<double>(state.steps);
  const double correction1 = 1.0 - std::pow(settings.beta1, t);
  const double correction2 = 1.0 - std::pow(settings.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m.mul_(settings.beta1).add_(grads[i], 1.0 - settings.beta1);
    v.mul_(settings.beta2).addcmul_(grads[i], grads[i], 1.0 - settings.beta2);
    auto denom = (v / correction2).sqrt_().add_(settings.epsilon);
    params[i].addcdiv_(m, denom, -settings.learning_rate / correction1);
  }
}

}  // namespace semcs
