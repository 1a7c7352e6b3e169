#include "semcs/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "semcs/error.hpp"
#include "semcs/scripted_encoders.hpp"
#include "semcs/scripted_module.hpp"

namespace semcs {

namespace {

constexpr double kDistsC1 = 1e-6;
constexpr double kDistsC2 = 1e-6;
constexpr int64_t kDistsMinSide = 16;
constexpr int64_t kNimaInputSize = 224;

class ScriptedDists final : public DistsMetric {
 public:
  ScriptedDists(std::string id, const std::filesystem::path& path) : id_(std::move(id)), module_(path) {
    alpha_ = module_.tensor_attr("alpha").detach().to(torch::kFloat64).reshape({-1});
    beta_ = module_.tensor_attr("beta").detach().to(torch::kFloat64).reshape({-1});
    if (alpha_.numel() != beta_.numel()) throw ConfigurationError(path.string() + ": alpha and beta differ in size");
  }

  std::string id() const override { return id_; }

 protected:
  std::vector<torch::Tensor> stages(const torch::Tensor& batched) const override {
    auto out = module_.run({batched.to(torch::kFloat32)});
    std::vector<torch::Tensor> maps;
    if (out.isTensorList()) {
      for (const auto& t : out.toTensorVector()) maps.push_back(t.to(torch::kFloat64));
    } else if (out.isTuple()) {
      for (const auto& v : out.toTupleRef().elements()) maps.push_back(v.toTensor().to(torch::kFloat64));
    } else if (out.isList()) {
      for (const auto& v : out.toList()) maps.push_back(v.get().toTensor().to(torch::kFloat64));
    } else {
      throw ConfigurationError(module_.path().string() + " must return a list of stage feature maps");
    }
    return maps;
  }
  torch::Tensor alpha() const override { return alpha_; }
  torch::Tensor beta() const override { return beta_; }

 private:
  std::string id_;
  scripted::ScriptedModule module_;
  torch::Tensor alpha_;
  torch::Tensor beta_;
};

class ScriptedNima final : public NimaMetric {
 public:
  ScriptedNima(std::string id, const std::filesystem::path& path) : id_(std::move(id)), module_(path) {}

  std::string id() const override { return id_; }

 protected:
  torch::Tensor compute(const torch::Tensor& image) const override {
    auto x = resize_bilinear(image, kNimaInputSize, kNimaInputSize).unsqueeze(0).to(torch::kFloat32);
    return module_.run({scripted::imagenet_normalize(x)}).toTensor();
  }

 private:
  std::string id_;
  scripted::ScriptedModule module_;
};

const std::vector<scripted::WeightSpec>& dists_models() {
  static const std::vector<scripted::WeightSpec> models{{"dists-vgg16", "dists_vgg16.pt"}};
  return models;
}

const std::vector<scripted::WeightSpec>& nima_models() {
  static const std::vector<scripted::WeightSpec> models{{"nima-aesthetic", "nima_aesthetic.pt"},
                                                        {"nima-technical", "nima_technical.pt"}};
  return models;
}

torch::Tensor luminance(const torch::Tensor& rgb) {
  return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
}

}  // namespace

double DistsMetric::score(const torch::Tensor& reference, const torch::Tensor& candidate) const {
  check_image_tensor(reference, "reference image");
  check_image_tensor(candidate, "candidate image");
  if (reference.sizes() != candidate.sizes()) {
    throw InvalidInput("DISTS needs images of equal size: " + std::to_string(reference.size(1)) + "x" +
                       std::to_string(reference.size(2)) + " vs " + std::to_string(candidate.size(1)) + "x" +
                       std::to_string(candidate.size(2)));
  }
  if (reference.size(1) < kDistsMinSide || reference.size(2) < kDistsMinSide) {
    throw InvalidInput("DISTS needs both sides >= " + std::to_string(kDistsMinSide));
  }
  torch::NoGradGuard no_grad;
  const auto xs = stages(reference.detach().to(torch::kFloat64).unsqueeze(0));
  const auto ys = stages(candidate.detach().to(torch::kFloat64).unsqueeze(0));
  if (xs.size() != ys.size() || xs.empty()) throw NumericError("DISTS stage lists differ");

  std::vector<torch::Tensor> s1;
  std::vector<torch::Tensor> s2;
  for (size_t i = 0; i < xs.size(); ++i) {
    auto x = xs[i].flatten(2);  // [1, C, HW]
    auto y = ys[i].flatten(2);
    auto mx = x.mean(2);
    auto my = y.mean(2);
    auto vx = (x - mx.unsqueeze(2)).square().mean(2);
    auto vy = (y - my.unsqueeze(2)).square().mean(2);
    auto cxy = ((x - mx.unsqueeze(2)) * (y - my.unsqueeze(2))).mean(2);
    s1.push_back(((2 * mx * my + kDistsC1) / (mx.square() + my.square() + kDistsC1)).reshape({-1}));
    s2.push_back(((2 * cxy + kDistsC2) / (vx + vy + kDistsC2)).reshape({-1}));
  }
  auto a = alpha().to(torch::kFloat64);
  auto b = beta().to(torch::kFloat64);
  auto structure = torch::cat(s1);
  auto texture = torch::cat(s2);
  if (a.numel() != structure.numel() || b.numel() != texture.numel()) {
    throw ConfigurationError("DISTS weights cover " + std::to_string(a.numel()) + " channels but the stages have " +
                             std::to_string(structure.numel()));
  }
  const auto norm = a.sum() + b.sum();
  const double similarity = ((a * structure).sum() + (b * texture).sum()).div(norm).item<double>();
  if (!std::isfinite(similarity)) throw NumericError("DISTS is not finite");
  return std::clamp(1.0 - similarity, 0.0, 1.0);
}

std::array<double, 10> NimaMetric::distribution(const torch::Tensor& image) const {
  check_image_tensor(image, "NIMA input");
  torch::Tensor out;
  {
    torch::NoGradGuard no_grad;
    out = compute(image.detach()).to(torch::kFloat64).reshape({-1});
  }
  if (out.numel() != 10) throw NumericError("NIMA model must produce 10 rating bins, got " + std::to_string(out.numel()));
  if (!torch::isfinite(out).all().item<bool>()) throw NumericError("NIMA output is not finite");
  const bool is_distribution =
      (out >= 0).all().item<bool>() && std::abs(out.sum().item<double>() - 1.0) < 1e-4;
  auto p = is_distribution ? out / out.sum() : torch::softmax(out, 0);
  std::array<double, 10> result{};
  auto acc = p.accessor<double, 1>();
  for (int64_t k = 0; k < 10; ++k) result[static_cast<size_t>(k)] = acc[k];
  return result;
}

double NimaMetric::score(const torch::Tensor& image) const {
  const auto p = distribution(image);
  double mean = 0.0;
  for (size_t k = 0; k < p.size(); ++k) mean += static_cast<double>(k + 1) * p[k];
  return std::clamp(mean, 1.0, 10.0);
}

std::vector<torch::Tensor> BuiltinDists::stages(const torch::Tensor& batched) const {
  std::vector<torch::Tensor> out{batched};
  for (auto& t : backbone_.forward(batched)) out.push_back(std::move(t));
  return out;
}

torch::Tensor BuiltinDists::alpha() const {
  int64_t channels = 3;
  for (auto c : builtin::RandomConvBackbone::tap_channels()) channels += c;
  return torch::full({channels}, 1.0, torch::kFloat64);
}

torch::Tensor BuiltinDists::beta() const { return alpha(); }

torch::Tensor BuiltinNima::compute(const torch::Tensor& image) const {
  auto x = resize_bilinear(image.to(torch::kFloat64), kNimaInputSize, kNimaInputSize);
  auto lum = luminance(x);
  const double brightness = lum.mean().item<double>();
  const double contrast = lum.std(false).item<double>();
  auto rg = x[0] - x[1];
  auto yb = 0.5 * (x[0] + x[1]) - x[2];
  const double colorfulness = std::sqrt(rg.var(false).item<double>() + yb.var(false).item<double>()) +
                              0.3 * std::sqrt(rg.mean().square().item<double>() + yb.mean().square().item<double>());
  auto lap = lum.narrow(0, 1, kNimaInputSize - 2).narrow(1, 1, kNimaInputSize - 2) * 4 -
             lum.narrow(0, 0, kNimaInputSize - 2).narrow(1, 1, kNimaInputSize - 2) -
             lum.narrow(0, 2, kNimaInputSize - 2).narrow(1, 1, kNimaInputSize - 2) -
             lum.narrow(0, 1, kNimaInputSize - 2).narrow(1, 0, kNimaInputSize - 2) -
             lum.narrow(0, 1, kNimaInputSize - 2).narrow(1, 2, kNimaInputSize - 2);
  const double sharpness = lap.abs().mean().item<double>();

  const double exposure = 2.0 * (brightness - 0.5);
  const double mean = 5.0 + 1.2 * std::tanh(4.0 * (contrast - 0.2)) + 0.8 * std::tanh(5.0 * (colorfulness - 0.15)) +
                      0.6 * std::tanh(20.0 * (sharpness - 0.03)) - 1.0 * exposure * exposure;
  constexpr double kSpread = 1.4;
  auto bins = torch::arange(1, 11, torch::kFloat64);
  return -(bins - mean).square() / (2.0 * kSpread * kSpread);
}

MetricConfig MetricConfig::builtin() {
  MetricConfig config;
  config.dists = "builtin";
  config.nima = "builtin";
  return config;
}

MetricSuite load_metrics(const MetricConfig& config) {
  MetricSuite suite;
  const auto dir = resolve_weights_dir(config.weights_dir);
  if (config.dists == "builtin") {
    suite.dists = std::make_shared<BuiltinDists>();
  } else {
    suite.dists = std::make_shared<ScriptedDists>(
        config.dists, scripted::require_weight_file(dists_models(), config.dists, dir, "DISTS"));
  }
  if (config.nima == "builtin") {
    suite.nima = std::make_shared<BuiltinNima>();
  } else {
    suite.nima = std::make_shared<ScriptedNima>(
        config.nima, scripted::require_weight_file(nima_models(), config.nima, dir, "NIMA"));
  }
  return suite;
}

double dists_score(const DistsMetric& metric, const ContentImage& reference, const torch::Tensor& candidate) {
  return metric.score(reference.tensor(), candidate);
}

double nima_score(const NimaMetric& metric, const torch::Tensor& image) { return metric.score(image); }

}  // namespace semcs
