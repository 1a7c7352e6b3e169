#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "semcs/builtin_encoders.hpp"
#include "semcs/image.hpp"

namespace semcs {

/// Full-reference structure/texture distance over a multi-stage feature
/// pyramid: 1 - sum_ij (alpha_ij * S1_ij + beta_ij * S2_ij), where S1 compares
/// channel means and S2 channel covariances.
class DistsMetric {
 public:
  virtual ~DistsMetric() = default;

  /// Both images [3, H, W] in [0, 1] with identical dims, sides >= 16.
  /// Lower = more similar; clamped to [0, 1].
  [[nodiscard]] double score(const torch::Tensor& reference, const torch::Tensor& candidate) const;

  [[nodiscard]] virtual std::string id() const = 0;

 protected:
  /// Stage 0 is conventionally the image itself.
  [[nodiscard]] virtual std::vector<torch::Tensor> stages(const torch::Tensor& batched) const = 0;
  /// Nonnegative weights over every channel of every stage, concatenated in
  /// stage order, [sum C_i]. Normalized jointly to sum 1 before use.
  [[nodiscard]] virtual torch::Tensor alpha() const = 0;
  [[nodiscard]] virtual torch::Tensor beta() const = 0;
};

/// No-reference aesthetic predictor: a distribution over ratings 1..10.
class NimaMetric {
 public:
  virtual ~NimaMetric() = default;

  /// Probability of each rating 1..10.
  [[nodiscard]] std::array<double, 10> distribution(const torch::Tensor& image) const;
  /// Expected rating, in [1, 10].
  [[nodiscard]] double score(const torch::Tensor& image) const;

  [[nodiscard]] virtual std::string id() const = 0;

 protected:
  /// Returns 10 logits or probabilities for a [3, H, W] image.
  [[nodiscard]] virtual torch::Tensor compute(const torch::Tensor& image) const = 0;
};

/// Image stage plus the four RandomConvBackbone taps, uniform weights.
class BuiltinDists final : public DistsMetric {
 public:
  [[nodiscard]] std::string id() const override { return "builtin"; }

 protected:
  [[nodiscard]] std::vector<torch::Tensor> stages(const torch::Tensor& batched) const override;
  [[nodiscard]] torch::Tensor alpha() const override;
  [[nodiscard]] torch::Tensor beta() const override;

 private:
  builtin::RandomConvBackbone backbone_;
};

/// Fixed linear rating model over contrast, colourfulness, sharpness and
/// exposure, turned into a discretized gaussian over the 10 ratings.
class BuiltinNima final : public NimaMetric {
 public:
  [[nodiscard]] std::string id() const override { return "builtin"; }

 protected:
  [[nodiscard]] torch::Tensor compute(const torch::Tensor& image) const override;
};

struct MetricConfig {
  std::string dists = "dists-vgg16";
  std::string nima = "nima-aesthetic";
  std::filesystem::path weights_dir;

  static MetricConfig builtin();
};

struct MetricSuite {
  std::shared_ptr<const DistsMetric> dists;
  std::shared_ptr<const NimaMetric> nima;
};

/// "builtin" or a TorchScript export under the weights directory:
///   dists-vgg16    -> dists_vgg16.pt  (forward: [1,3,H,W] in [0,1] -> list of stage maps;
///                                      attributes "alpha", "beta": [1, sum C, 1, 1])
///   nima-aesthetic -> nima_aesthetic.pt, nima-technical -> nima_technical.pt
///                     (forward: [1,3,224,224] ImageNet-normalized -> [1,10])
MetricSuite load_metrics(const MetricConfig& config);

double dists_score(const DistsMetric& metric, const ContentImage& reference, const torch::Tensor& candidate);
double nima_score(const NimaMetric& metric, const torch::Tensor& image);

}  // namespace semcs
