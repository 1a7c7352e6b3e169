#include "semcs/scripted_encoders.hpp"

#include "semcs/error.hpp"
#include "semcs/image.hpp"
#include "semcs/scripted_module.hpp"
#include "semcs/tokenizer.hpp"

namespace semcs::scripted {

namespace {

torch::Tensor channel_normalize(const torch::Tensor& batched, std::array<double, 3> mean, std::array<double, 3> std) {
  auto opts = batched.options();
  auto m = torch::tensor({mean[0], mean[1], mean[2]}, torch::kFloat64).to(opts.dtype()).view({1, 3, 1, 1});
  auto s = torch::tensor({std[0], std[1], std[2]}, torch::kFloat64).to(opts.dtype()).view({1, 3, 1, 1});
  return (batched - m) / s;
}

class ScriptedDenseExtractor final : public DenseFeatureExtractor {
 public:
  ScriptedDenseExtractor(std::string id, const std::filesystem::path& path) : id_(std::move(id)), module_(path) {}

  std::string id() const override { return id_; }
  int64_t patch_stride() const override { return 8; }
  int64_t input_size() const override { return 224; }

 protected:
  torch::Tensor compute(const torch::Tensor& batched) const override {
    auto out = module_.run({imagenet_normalize(batched.to(torch::kFloat32))}).toTensor();
    if (out.dim() == 3) out = out.squeeze(0);
    const int64_t grid = input_size() / patch_stride();
    if (out.dim() == 2 && out.size(0) == grid * grid + 1) out = out.narrow(0, 1, grid * grid);
    return out;
  }

 private:
  std::string id_;
  ScriptedModule module_;
};

class ScriptedImageEncoder final : public ImageEncoder {
 public:
  ScriptedImageEncoder(std::string id, const std::filesystem::path& path) : id_(std::move(id)), module_(path) {
    torch::NoGradGuard no_grad;
    auto probe = module_.run({torch::zeros({1, 3, kInputSize, kInputSize})}).toTensor();
    dim_ = probe.size(-1);
  }

  std::string id() const override { return id_; }
  int64_t dim() const override { return dim_; }
  std::string embedding_layer() const override { return "final pooled embedding"; }

  static constexpr int64_t kInputSize = 224;

 protected:
  torch::Tensor compute(const torch::Tensor& image) const override {
    auto x = resize_bilinear(image, kInputSize, kInputSize).unsqueeze(0);
    auto out = module_.run({clip_normalize(x.to(torch::kFloat32))}).toTensor();
    return out.reshape({-1}).to(image.scalar_type());
  }

 private:
  std::string id_;
  ScriptedModule module_;
  int64_t dim_ = 0;
};

class ScriptedTextEncoder final : public TextEncoder {
 public:
  ScriptedTextEncoder(std::string id, const std::filesystem::path& path, const std::filesystem::path& vocab)
      : id_(std::move(id)), module_(path), tokenizer_(ClipTokenizer::from_file(vocab)) {
    torch::NoGradGuard no_grad;
    dim_ = module_.run({tokenizer_.tokenize("photo")}).toTensor().size(-1);
  }

  std::string id() const override { return id_; }
  int64_t dim() const override { return dim_; }

 protected:
  torch::Tensor compute(const std::string& text) const override {
    torch::NoGradGuard no_grad;
    return module_.run({tokenizer_.tokenize(text)}).toTensor().reshape({-1});
  }

 private:
  std::string id_;
  ScriptedModule module_;
  ClipTokenizer tokenizer_;
  int64_t dim_ = 0;
};

class ScriptedContentExtractor final : public ContentFeatureExtractor {
 public:
  ScriptedContentExtractor(std::string id, const std::filesystem::path& path, std::vector<std::string> layers,
                           std::vector<int64_t> strides)
      : id_(std::move(id)), module_(path), layers_(std::move(layers)), strides_(std::move(strides)) {}

  std::string id() const override { return id_; }
  std::vector<std::string> layer_names() const override { return layers_; }
  std::vector<int64_t> layer_strides() const override { return strides_; }

 protected:
  ContentFeatureSet compute(const torch::Tensor& image) const override {
    auto x = imagenet_normalize(image.unsqueeze(0).to(torch::kFloat32));
    auto out = module_.run({x});
    std::vector<torch::Tensor> maps;
    if (out.isTuple()) {
      for (const auto& element : out.toTupleRef().elements()) maps.push_back(element.toTensor());
    } else if (out.isTensorList()) {
      for (const auto& t : out.toTensorVector()) maps.push_back(t);
    } else {
      maps.push_back(out.toTensor());
    }
    if (maps.size() != layers_.size()) {
      throw NumericError("content export returned " + std::to_string(maps.size()) + " maps, expected " +
                         std::to_string(layers_.size()));
    }
    ContentFeatureSet set;
    for (size_t i = 0; i < maps.size(); ++i) set.layers.emplace_back(layers_[i], maps[i].squeeze(0).to(image.scalar_type()));
    return set;
  }

 private:
  std::string id_;
  ScriptedModule module_;
  std::vector<std::string> layers_;
  std::vector<int64_t> strides_;
};

}  // namespace

ScriptedModule::ScriptedModule(const std::filesystem::path& path) : path_(path) {
  try {
    module_ = torch::jit::load(path.string());
    module_.eval();
  } catch (const c10::Error& e) {
    throw ConfigurationError("cannot load TorchScript module " + path.string() + ": " + e.what_without_backtrace());
  }
}

torch::jit::IValue ScriptedModule::run(std::vector<torch::jit::IValue> inputs) const {
  std::lock_guard lock(mutex_);
  try {
    return module_.forward(std::move(inputs));
  } catch (const c10::Error& e) {
    throw NumericError("TorchScript module " + path_.string() + " failed: " + e.what_without_backtrace());
  }
}

torch::Tensor ScriptedModule::tensor_attr(const std::string& name) const {
  std::lock_guard lock(mutex_);
  if (!module_.hasattr(name)) {
    throw ConfigurationError("TorchScript module " + path_.string() + " has no attribute '" + name + "'");
  }
  auto value = module_.attr(name);
  if (!value.isTensor()) throw ConfigurationError("attribute '" + name + "' of " + path_.string() + " is not a tensor");
  return value.toTensor();
}

const std::vector<WeightSpec>& dense_models() {
  static const std::vector<WeightSpec> models = {{"dino-vits8", "dino_vits8_keys.pt"}};
  return models;
}

const std::vector<WeightSpec>& image_models() {
  static const std::vector<WeightSpec> models = {
      {"clip-rn50-softmax3d", "clip_rn50_softmax3d_image.pt"},
      {"clip-vit-b32", "clip_vitb32_image.pt"},
  };
  return models;
}

const std::vector<WeightSpec>& text_models() {
  static const std::vector<WeightSpec> models = {{"clip-text", "clip_text.pt"}};
  return models;
}

const std::vector<WeightSpec>& content_models() {
  static const std::vector<WeightSpec> models = {{"vgg19", "vgg19_content.pt"}};
  return models;
}

std::filesystem::path require_weight_file(const std::vector<WeightSpec>& models, const std::string& id,
                                          const std::filesystem::path& dir, const std::string& kind) {
  for (const auto& spec : models) {
    if (spec.id != id) continue;
    auto path = dir / spec.file;
    if (!std::filesystem::exists(path)) {
      throw ConfigurationError("missing weight file for " + kind + " '" + id + "': expected " + path.string() +
                               " (set SEMCS_WEIGHTS_DIR or weights_dir, or select the 'builtin' encoder)");
    }
    return path;
  }
  std::string known = "builtin";
  for (const auto& spec : models) known += ", " + spec.id;
  throw ConfigurationError("unknown " + kind + " id '" + id + "' (known: " + known + ")");
}

torch::Tensor imagenet_normalize(const torch::Tensor& batched) {
  return channel_normalize(batched, {0.485, 0.456, 0.406}, {0.229, 0.224, 0.225});
}

torch::Tensor clip_normalize(const torch::Tensor& batched) {
  return channel_normalize(batched, {0.48145466, 0.4578275, 0.40821073}, {0.26862954, 0.26130258, 0.27577711});
}

std::shared_ptr<const DenseFeatureExtractor> load_dense_extractor(const std::string& id,
                                                                  const std::filesystem::path& dir) {
  return std::make_shared<ScriptedDenseExtractor>(id, require_weight_file(dense_models(), id, dir, "dense extractor"));
}

std::shared_ptr<const ImageEncoder> load_image_encoder(const std::string& id, const std::filesystem::path& dir) {
  return std::make_shared<ScriptedImageEncoder>(id, require_weight_file(image_models(), id, dir, "image encoder"));
}

std::shared_ptr<const TextEncoder> load_text_encoder(const std::string& id, const std::filesystem::path& dir) {
  auto path = require_weight_file(text_models(), id, dir, "text encoder");
  auto vocab = dir / kTokenizerVocabFile;
  if (!std::filesystem::exists(vocab)) {
    throw ConfigurationError("missing tokenizer vocabulary for text encoder '" + id + "': expected " + vocab.string());
  }
  return std::make_shared<ScriptedTextEncoder>(id, path, vocab);
}

std::shared_ptr<const ContentFeatureExtractor> load_content_extractor(const std::string& id,
                                                                      const std::filesystem::path& dir) {
  auto path = require_weight_file(content_models(), id, dir, "content extractor");
  return std::make_shared<ScriptedContentExtractor>(id, path, std::vector<std::string>{"conv4_2", "conv5_2"},
                                                    std::vector<int64_t>{8, 16});
}

}  // namespace semcs::scripted
