#include "semcs/encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "semcs/builtin_encoders.hpp"
#include "semcs/error.hpp"
#include "semcs/image.hpp"
#include "semcs/scripted_encoders.hpp"

namespace semcs {

namespace {

constexpr int64_t kMinImageSide = 64;

torch::Tensor unit_normalize(const torch::Tensor& v) { return v / v.norm().clamp_min(1e-12); }

std::string trim(std::string_view text) {
  auto begin = text.begin();
  auto end = text.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
  return {begin, end};
}

}  // namespace

DenseFeatureMap DenseFeatureExtractor::extract_dense_features(const torch::Tensor& image) const {
  check_image_tensor(image, "dense feature input");
  if (image.size(1) < kMinImageSide || image.size(2) < kMinImageSide) {
    throw InvalidInput("dense feature input must be at least 64x64 px, got " + std::to_string(image.size(1)) + "x" +
                       std::to_string(image.size(2)));
  }
  const int64_t side = input_size();
  const int64_t grid = side / patch_stride();
  if (grid < 2) throw InvalidInput("image too small for the extractor's patch grid");

  torch::NoGradGuard no_grad;
  auto batched = resize_bilinear(image.detach(), side, side).clamp(0.0, 1.0).unsqueeze(0);
  auto rows = compute(batched).to(torch::kFloat64).contiguous();
  if (rows.dim() != 2 || rows.size(0) != grid * grid) {
    throw NumericError("dense extractor '" + id() + "' returned " + std::to_string(rows.size(0)) + " rows, expected " +
                       std::to_string(grid * grid));
  }
  if (!torch::isfinite(rows).all().item<bool>()) throw NumericError("dense extractor produced non-finite features");

  DenseFeatureMap map;
  map.grid_h = grid;
  map.grid_w = grid;
  map.features = rows;
  map.image_h = image.size(1);
  map.image_w = image.size(2);
  map.normalized = normalizes_rows();
  return map;
}

Embedding ImageEncoder::encode_image(const torch::Tensor& image) const {
  check_image_tensor(image, "image encoder input");
  auto raw = compute(image);
  if (raw.dim() != 1 || raw.size(0) != dim()) {
    throw NumericError("image encoder '" + id() + "' returned an embedding of unexpected shape");
  }
  if (!torch::isfinite(raw.detach()).all().item<bool>()) throw NumericError("image encoder produced non-finite values");
  return {unit_normalize(raw.to(image.scalar_type())), Modality::image};
}

Embedding TextEncoder::encode_text(std::string_view text) const {
  auto trimmed = trim(text);
  if (trimmed.empty()) throw InvalidInput("text must be nonempty");
  auto raw = compute(trimmed);
  if (raw.dim() != 1 || raw.size(0) != dim()) {
    throw NumericError("text encoder '" + id() + "' returned an embedding of unexpected shape");
  }
  return {unit_normalize(raw.to(torch::kFloat64)), Modality::text};
}

ContentFeatureSet ContentFeatureExtractor::extract_content_features(const torch::Tensor& image) const {
  check_image_tensor(image, "content feature input");
  auto set = compute(image);
  const auto names = layer_names();
  if (set.layers.size() != names.size()) throw NumericError("content extractor returned the wrong number of layers");
  for (size_t i = 0; i < names.size(); ++i) {
    if (set.layers[i].first != names[i]) throw NumericError("content extractor layer order mismatch");
  }
  return set;
}

EncoderConfig EncoderConfig::builtin() {
  EncoderConfig config;
  config.dense = config.image = config.text = config.content = "builtin";
  return config;
}

EncoderConfig EncoderConfig::pretrained() { return EncoderConfig{}; }

std::filesystem::path resolve_weights_dir(const std::filesystem::path& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("SEMCS_WEIGHTS_DIR"); env != nullptr && *env != '\0') return env;
  return "weights";
}

std::shared_ptr<const DenseFeatureExtractor> make_dense_extractor(const std::string& id,
                                                                  const std::filesystem::path& weights_dir) {
  if (id == "builtin") return std::make_shared<builtin::PatchDescriptorExtractor>();
  return scripted::load_dense_extractor(id, resolve_weights_dir(weights_dir));
}

std::shared_ptr<const ImageEncoder> make_image_encoder(const std::string& id, const std::filesystem::path& weights_dir) {
  if (id == "builtin") return std::make_shared<builtin::ConceptImageEncoder>();
  return scripted::load_image_encoder(id, resolve_weights_dir(weights_dir));
}

std::shared_ptr<const TextEncoder> make_text_encoder(const std::string& id, const std::filesystem::path& weights_dir) {
  if (id == "builtin") return std::make_shared<builtin::LexiconTextEncoder>();
  return scripted::load_text_encoder(id, resolve_weights_dir(weights_dir));
}

std::shared_ptr<const ContentFeatureExtractor> make_content_extractor(const std::string& id,
                                                                      const std::filesystem::path& weights_dir) {
  if (id == "builtin") return std::make_shared<builtin::RandomConvContentExtractor>();
  return scripted::load_content_extractor(id, resolve_weights_dir(weights_dir));
}

EncoderSuite load_encoders(const EncoderConfig& config) {
  EncoderSuite suite;
  suite.dense = make_dense_extractor(config.dense, config.weights_dir);
  suite.image = make_image_encoder(config.image, config.weights_dir);
  suite.text = make_text_encoder(config.text, config.weights_dir);
  suite.content = make_content_extractor(config.content, config.weights_dir);
  if (suite.image->dim() != suite.text->dim()) {
    throw ConfigurationError("image encoder '" + config.image + "' (dim " + std::to_string(suite.image->dim()) +
                             ") and text encoder '" + config.text + "' (dim " + std::to_string(suite.text->dim()) +
                             ") do not share an embedding space");
  }
  return suite;
}

double cosine(const Embedding& a, const Embedding& b) {
  auto x = a.values.detach().to(torch::kFloat64);
  auto y = b.values.detach().to(torch::kFloat64);
  return (x.dot(y) / (x.norm() * y.norm()).clamp_min(1e-12)).item<double>();
}

}  // namespace semcs
