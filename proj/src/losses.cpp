#include "semcs/losses.hpp"

#include <cmath>

#include "semcs/error.hpp"

namespace semcs {

namespace {

void check_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t.detach()).all().item<bool>()) throw NumericError(std::string(what) + " is not finite");
}

void check_output(const torch::Tensor& output, const ContentImage& content) {
  check_image_tensor(output, "stylized output", false);
  if (output.size(1) != content.height() || output.size(2) != content.width()) {
    throw InvalidInput("stylized output is " + std::to_string(output.size(1)) + "x" + std::to_string(output.size(2)) +
                       " but the content image is " + std::to_string(content.height()) + "x" +
                       std::to_string(content.width()));
  }
}

torch::Tensor masked_directional(const ImageEncoder& encoder, const torch::Tensor& output, const torch::Tensor& mask,
                                 const torch::Tensor& content_embedding, const DirectionVector& text_dir) {
  auto part = output * mask;
  auto image_dir = encoder.encode_image(part).values - content_embedding.to(output.scalar_type());
  return directional_loss(image_dir, text_dir.values);
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {background, content, tv}) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidInput("loss weights must be finite and nonnegative");
  }
}

LossBreakdown compose_total(double fglob, double bglob, double content, double tv, const LossWeights& weights) {
  weights.validate();
  LossBreakdown out{fglob, bglob, content, tv, 0.0, weights};
  out.total = fglob + weights.background * bglob + weights.content * content + weights.tv * tv;
  return out;
}

DirectionVector text_direction(const TextEncoder& encoder, std::string_view style, std::string_view source,
                               DirectionKind kind) {
  auto styled = encoder.encode_text(style);
  auto base = encoder.encode_text(source);
  return {styled.values - base.values, kind};
}

DirectionVector image_direction(const ImageEncoder& encoder, const torch::Tensor& part, const ContentImage& content,
                                DirectionKind kind) {
  check_image_tensor(part, "image part", false);
  if (part.sizes() != content.tensor().sizes()) {
    throw InvalidInput("image part and content image differ in shape");
  }
  auto base = encoder.encode_image(content.tensor().to(part.scalar_type())).values;
  return {encoder.encode_image(part).values - base, kind};
}

torch::Tensor directional_loss(const torch::Tensor& image_dir, const torch::Tensor& text_dir) {
  if (image_dir.dim() != 1 || text_dir.dim() != 1 || image_dir.size(0) != text_dir.size(0)) {
    throw InvalidInput("direction vectors must be 1-D with equal length");
  }
  check_finite(image_dir, "image direction");
  check_finite(text_dir, "text direction");
  auto t = text_dir.to(image_dir.scalar_type());
  auto image_norm = image_dir.norm();
  auto text_norm = t.norm();
  if (image_norm.item<double>() < kDirectionEpsilon || text_norm.item<double>() < kDirectionEpsilon) {
    // Orthogonal convention; keeps the graph connected with a zero gradient.
    return image_dir.sum() * 0.0 + 1.0;
  }
  return 1.0 - image_dir.dot(t) / (image_norm.clamp_min(kDirectionEpsilon) * text_norm.clamp_min(kDirectionEpsilon));
}

double directional_loss(const DirectionVector& image_dir, const DirectionVector& text_dir) {
  return directional_loss(image_dir.values.detach(), text_dir.values.detach()).item<double>();
}

void check_partition_mask(const SaliencyMask& mask, int64_t height, int64_t width) {
  if (mask.height() != height || mask.width() != width) throw InvalidInput("mask and image dimensions differ");
  const double coverage = mask.coverage();
  if (coverage <= 0.0 || coverage >= 1.0) {
    throw InvalidInput("mask must contain both foreground and background (coverage " + std::to_string(coverage) + ")");
  }
}

torch::Tensor global_foreground_loss(const EncoderSuite& encoders, const torch::Tensor& output,
                                     const ContentImage& content, const SaliencyMask& mask, std::string_view fg_text) {
  check_output(output, content);
  check_partition_mask(mask, content.height(), content.width());
  const auto text_dir = text_direction(*encoders.text, fg_text, kSourceText, DirectionKind::fg_text);
  const auto base = encoders.image->encode_image(content.tensor().to(output.scalar_type())).values.detach();
  return masked_directional(*encoders.image, output, mask.as_tensor(output.scalar_type()).unsqueeze(0), base,
                            text_dir);
}

torch::Tensor global_background_loss(const EncoderSuite& encoders, const torch::Tensor& output,
                                     const ContentImage& content, const SaliencyMask& mask, std::string_view bg_text) {
  check_output(output, content);
  check_partition_mask(mask, content.height(), content.width());
  const auto text_dir = text_direction(*encoders.text, bg_text, kSourceText, DirectionKind::bg_text);
  const auto base = encoders.image->encode_image(content.tensor().to(output.scalar_type())).values.detach();
  return masked_directional(*encoders.image, output, mask.complement().as_tensor(output.scalar_type()).unsqueeze(0),
                            base, text_dir);
}

torch::Tensor content_loss(const ContentFeatureSet& output_features, const ContentFeatureSet& content_features) {
  if (output_features.layers.size() != content_features.layers.size() || output_features.layers.empty()) {
    throw InvalidInput("content feature sets have different layer lists");
  }
  torch::Tensor total;
  for (size_t i = 0; i < output_features.layers.size(); ++i) {
    const auto& [name, out] = output_features.layers[i];
    const auto& [ref_name, ref] = content_features.layers[i];
    if (name != ref_name || out.sizes() != ref.sizes()) {
      throw InvalidInput("content feature layer '" + name + "' does not match '" + ref_name + "'");
    }
    auto term = (out - ref.to(out.scalar_type())).square().mean();
    total = total.defined() ? total + term : term;
  }
  return total;
}

torch::Tensor content_loss(const ContentFeatureExtractor& extractor, const torch::Tensor& output,
                           const ContentImage& content) {
  check_output(output, content);
  ContentFeatureSet reference;
  {
    torch::NoGradGuard no_grad;
    reference = extractor.extract_content_features(content.tensor().to(output.scalar_type()));
  }
  return content_loss(extractor.extract_content_features(output), reference);
}

torch::Tensor tv_loss(const torch::Tensor& output) {
  if (output.dim() != 3) throw InvalidInput("tv_loss expects a [C, H, W] tensor");
  const int64_t h = output.size(1);
  const int64_t w = output.size(2);
  auto total = output.sum() * 0.0;
  if (w > 1) total = total + (output.narrow(2, 1, w - 1) - output.narrow(2, 0, w - 1)).square().mean();
  if (h > 1) total = total + (output.narrow(1, 1, h - 1) - output.narrow(1, 0, h - 1)).square().mean();
  return total;
}

LossBreakdown ObjectiveTerms::breakdown() const {
  return compose_total(fglob.item<double>(), bglob.item<double>(), content.item<double>(), tv.item<double>(), weights);
}

SemanticObjective::SemanticObjective(EncoderSuite encoders, ContentImage content, SaliencyMask mask,
                                     std::string fg_text, std::string bg_text, LossWeights weights,
                                     bool background_term)
    : encoders_(std::move(encoders)),
      content_(std::move(content)),
      mask_(std::move(mask)),
      weights_(weights),
      background_term_(background_term) {
  weights_.validate();
  if (background_term_) {
    check_partition_mask(mask_, content_.height(), content_.width());
  } else if (mask_.height() != content_.height() || mask_.width() != content_.width()) {
    throw InvalidInput("mask and image dimensions differ");
  }
  const auto dtype = content_.dtype();
  fg_mask_ = mask_.as_tensor(dtype).unsqueeze(0);
  bg_mask_ = mask_.complement().as_tensor(dtype).unsqueeze(0);
  fg_text_dir_ = text_direction(*encoders_.text, fg_text, kSourceText, DirectionKind::fg_text);
  bg_text_dir_ = text_direction(*encoders_.text, bg_text, kSourceText, DirectionKind::bg_text);

  torch::NoGradGuard no_grad;
  content_embedding_ = encoders_.image->encode_image(content_.tensor()).values;
  content_features_ = encoders_.content->extract_content_features(content_.tensor());
}

ObjectiveTerms SemanticObjective::evaluate(const torch::Tensor& output) const {
  check_output(output, content_);
  ObjectiveTerms terms;
  terms.weights = weights_;
  terms.fglob = masked_directional(*encoders_.image, output, fg_mask_.to(output.scalar_type()), content_embedding_,
                                   fg_text_dir_);
  terms.bglob = background_term_ ? masked_directional(*encoders_.image, output, bg_mask_.to(output.scalar_type()),
                                                      content_embedding_, bg_text_dir_)
                                 : output.sum() * 0.0;
  terms.content = content_loss(encoders_.content->extract_content_features(output), content_features_);
  terms.tv = tv_loss(output);
  terms.total = terms.fglob + weights_.background * terms.bglob + weights_.content * terms.content +
                weights_.tv * terms.tv;
  return terms;
}

}  // namespace semcs
