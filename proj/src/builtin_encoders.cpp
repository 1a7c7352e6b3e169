#include "semcs/builtin_encoders.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <initializer_list>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "semcs/image.hpp"
#include "semcs/random.hpp"

namespace semcs::builtin {

namespace F = torch::nn::functional;

namespace {

constexpr int64_t kPaletteSize = static_cast<int64_t>(kPalette.size());

torch::Tensor palette_tensor(torch::ScalarType dtype) {
  auto out = torch::empty({kPaletteSize, 3}, torch::kFloat64);
  auto acc = out.accessor<double, 2>();
  for (int64_t k = 0; k < kPaletteSize; ++k) {
    for (int64_t c = 0; c < 3; ++c) acc[k][c] = kPalette[k].rgb[c];
  }
  return out.to(dtype);
}

int64_t palette_index(const char* name) {
  for (int64_t k = 0; k < kPaletteSize; ++k) {
    if (std::string_view(kPalette[k].name) == name) return k;
  }
  throw std::logic_error(std::string("unknown palette color ") + name);
}

torch::Tensor avg_pool(const torch::Tensor& x, int64_t kernel) {
  return F::avg_pool2d(x, F::AvgPool2dFuncOptions(kernel).stride(kernel));
}

// Mean gradient magnitude of a [N, H, W] luminance map.
torch::Tensor mean_gradient_magnitude(const torch::Tensor& lum) {
  const int64_t h = lum.size(1);
  const int64_t w = lum.size(2);
  auto base = lum.narrow(1, 0, h - 1).narrow(2, 0, w - 1);
  auto dx = lum.narrow(1, 0, h - 1).narrow(2, 1, w - 1) - base;
  auto dy = lum.narrow(1, 1, h - 1).narrow(2, 0, w - 1) - base;
  return (dx.square() + dy.square() + 1e-6).sqrt().mean();
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense patch descriptors

torch::Tensor PatchDescriptorExtractor::compute(const torch::Tensor& batched) const {
  const int64_t stride = patch_stride();
  auto x = batched.to(torch::kFloat64);
  auto r = x.select(1, 0);
  auto g = x.select(1, 1);
  auto b = x.select(1, 2);
  auto lum = (r + g + b) / 3.0;
  auto opponent = torch::stack({lum, r - g, (r + g) / 2.0 - b}, 1);  // [1, 3, H, W]

  auto lum4 = lum.unsqueeze(1);
  auto mean_color = avg_pool(opponent, stride);
  auto contrast = (avg_pool(lum4.square(), stride) - avg_pool(lum4, stride).square()).clamp_min(0.0).sqrt();

  const int64_t h = lum4.size(2);
  const int64_t w = lum4.size(3);
  auto gx = F::pad((lum4.narrow(3, 1, w - 1) - lum4.narrow(3, 0, w - 1)).abs(), F::PadFuncOptions({0, 1, 0, 0}));
  auto gy = F::pad((lum4.narrow(2, 1, h - 1) - lum4.narrow(2, 0, h - 1)).abs(), F::PadFuncOptions({0, 0, 0, 1}));
  auto local = torch::cat({mean_color, contrast, avg_pool(gx, stride), avg_pool(gy, stride)}, 1);  // [1, 6, gh, gw]
  auto near = F::avg_pool2d(local, F::AvgPool2dFuncOptions(5).stride(1).padding(2).count_include_pad(false));
  auto wide = F::avg_pool2d(local, F::AvgPool2dFuncOptions(11).stride(1).padding(5).count_include_pad(false));

  auto stacked = torch::cat({local, near, wide}, 1);  // [1, 18, gh, gw]
  const int64_t channels = stacked.size(1);
  auto rows = stacked.reshape({channels, -1}).transpose(0, 1).contiguous();  // [n, 18]

  // Standardize over patches; a flat channel collapses to zero.
  auto centered = rows - rows.mean(0, true);
  auto spread = centered.square().mean(0, true).sqrt();
  auto standardized = centered / (spread + 0.02);

  // Chroma outweighs texture so regions follow objects rather than edges.
  const auto scale = torch::tensor({1.0, 1.2, 1.2, 0.5, 0.5, 0.5}, torch::kFloat64);
  auto weighted = standardized * scale.repeat({3});
  auto bias = torch::full({rows.size(0), 1}, 1.5, torch::kFloat64);
  return torch::cat({weighted, bias}, 1);
}

// ---------------------------------------------------------------------------
// Concept image encoder

torch::Tensor ConceptImageEncoder::compute(const torch::Tensor& image) const {
  auto x = resize_bilinear(image, kInputSize, kInputSize).unsqueeze(0);  // [1, 3, S, S]
  const auto dtype = x.scalar_type();

  auto palette = palette_tensor(dtype).view({1, kPaletteSize, 3, 1, 1});
  auto sq_dist = (x.unsqueeze(1) - palette).square().sum(2);  // [1, K, S, S]
  auto membership = torch::softmax(-sq_dist / kTemperature, 1);
  auto histogram = membership.mean(std::vector<int64_t>{0, 2, 3});  // [K]
  auto color = (histogram + 1e-4).sqrt() - 1e-2;

  auto lum = x.mean(1);  // [1, S, S]
  auto fine = 5.0 * mean_gradient_magnitude(lum);
  auto coarse = 5.0 * mean_gradient_magnitude(avg_pool(lum.unsqueeze(1), 2).squeeze(1));
  auto chroma = (x - x.mean(1, true)).square().mean(1);
  auto saturation = 2.0 * (chroma + 1e-6).sqrt().mean();
  auto brightness = lum.mean();
  auto texture = torch::stack({fine, coarse, saturation, brightness});

  auto hashed = torch::zeros({kHashDims}, x.options());
  return torch::cat({color, texture, hashed});
}

// ---------------------------------------------------------------------------
// Lexicon text encoder

namespace {

struct LexiconEntry {
  std::array<double, kPalette.size()> palette{};
  std::array<double, kTextureDims> texture{};
};

struct LexiconRow {
  std::initializer_list<const char*> words;
  std::initializer_list<std::pair<const char*, double>> colors;
  std::array<double, kTextureDims> texture;
};

const std::unordered_map<std::string, LexiconEntry>& lexicon() {
  static const auto table = [] {
    const std::initializer_list<LexiconRow> rows = {
        {{"photo", "photograph", "picture", "image"},
         {{"gray", .14}, {"brown", .14}, {"black", .10}, {"white", .08}, {"green", .08}, {"sky", .08}, {"tan", .10},
          {"blue", .05}, {"orange", .05}, {"red", .05}, {"yellow", .04}, {"navy", .05}, {"pink", .02}, {"purple", .02}},
         {.40, .35, .30, .45}},
        {{"snow", "snowy", "winter"}, {{"white", .55}, {"sky", .20}, {"gray", .15}, {"blue", .10}}, {.15, .12, .10, .80}},
        {{"ice", "icy", "frozen"}, {{"sky", .40}, {"white", .35}, {"blue", .25}}, {.20, .15, .25, .75}},
        {{"desert"}, {{"tan", .45}, {"orange", .25}, {"yellow", .15}, {"brown", .15}}, {.30, .25, .40, .65}},
        {{"sand", "sandy"}, {{"tan", .60}, {"yellow", .20}, {"brown", .20}}, {.45, .30, .35, .65}},
        {{"red"}, {{"red", .80}, {"pink", .10}, {"brown", .10}}, {.35, .30, .80, .40}},
        {{"rock", "rocks", "rocky", "stone", "stones"},
         {{"brown", .35}, {"gray", .35}, {"black", .15}, {"tan", .15}},
         {.70, .60, .20, .40}},
        {{"fire", "flame", "flames", "lava"}, {{"orange", .35}, {"red", .35}, {"yellow", .20}, {"black", .10}},
         {.50, .40, .80, .55}},
        {{"water", "ocean", "sea", "wave", "waves", "underwater"},
         {{"blue", .45}, {"sky", .30}, {"navy", .15}, {"white", .10}},
         {.35, .30, .50, .45}},
        {{"sky"}, {{"sky", .60}, {"white", .25}, {"blue", .15}}, {.10, .10, .35, .70}},
        {{"cloud", "clouds", "cloudy"}, {{"white", .45}, {"gray", .35}, {"sky", .20}}, {.15, .15, .10, .70}},
        {{"night", "dark"}, {{"navy", .40}, {"black", .45}, {"blue", .15}}, {.20, .20, .25, .12}},
        {{"starry", "stars", "galaxy"}, {{"navy", .50}, {"black", .20}, {"yellow", .20}, {"white", .10}},
         {.50, .40, .45, .25}},
        {{"sunset", "dusk", "sunrise"},
         {{"orange", .35}, {"pink", .25}, {"purple", .20}, {"red", .10}, {"yellow", .10}},
         {.20, .20, .60, .50}},
        {{"forest", "grass", "leaves", "jungle", "tree", "trees"},
         {{"green", .65}, {"brown", .20}, {"yellow", .15}},
         {.65, .50, .50, .40}},
        {{"autumn", "fall"}, {{"orange", .35}, {"brown", .30}, {"red", .20}, {"yellow", .15}}, {.60, .50, .60, .45}},
        {{"gold", "golden"}, {{"yellow", .50}, {"orange", .30}, {"tan", .20}}, {.45, .35, .70, .65}},
        {{"neon", "cyberpunk"}, {{"pink", .35}, {"sky", .25}, {"purple", .30}, {"black", .10}}, {.45, .40, .90, .45}},
        {{"pastel"}, {{"pink", .30}, {"sky", .30}, {"white", .25}, {"yellow", .15}}, {.15, .15, .30, .80}},
        {{"watercolor", "watercolour"},
         {{"sky", .20}, {"pink", .20}, {"white", .30}, {"yellow", .10}, {"green", .10}, {"purple", .10}},
         {.20, .15, .40, .75}},
        {{"oil", "acrylic", "painting", "paint", "brush", "brushstrokes"},
         {{"yellow", .15}, {"orange", .15}, {"blue", .20}, {"green", .15}, {"red", .15}, {"brown", .20}},
         {.85, .70, .55, .50}},
        {{"sketch", "pencil", "drawing", "charcoal"}, {{"white", .50}, {"gray", .35}, {"black", .15}}, {.60, .40, .02, .75}},
        {{"ink"}, {{"black", .50}, {"white", .35}, {"gray", .15}}, {.70, .50, .02, .50}},
        {{"graffiti"},
         {{"red", .25}, {"blue", .20}, {"yellow", .20}, {"pink", .15}, {"green", .10}, {"black", .10}},
         {.80, .65, .85, .50}},
        {{"fauvism", "fauvist", "fauve"},
         {{"red", .30}, {"orange", .20}, {"green", .20}, {"blue", .15}, {"yellow", .15}},
         {.60, .55, .90, .55}},
        {{"monet", "impressionism", "impressionist"},
         {{"sky", .25}, {"green", .25}, {"pink", .20}, {"purple", .15}, {"yellow", .15}},
         {.70, .55, .50, .60}},
        {{"mosaic"}, {{"blue", .20}, {"yellow", .20}, {"red", .20}, {"green", .20}, {"white", .20}}, {.90, .80, .70, .50}},
        {{"rainbow"},
         {{"red", .15}, {"orange", .15}, {"yellow", .15}, {"green", .15}, {"blue", .15}, {"purple", .15}, {"pink", .10}},
         {.40, .35, .90, .55}},
        {{"cartoon", "comic"},
         {{"red", .20}, {"yellow", .20}, {"blue", .20}, {"white", .20}, {"black", .20}},
         {.30, .20, .85, .60}},
        {{"metal", "metallic", "steel", "silver"}, {{"gray", .60}, {"white", .30}, {"black", .10}}, {.50, .40, .05, .55}},
        {{"wood", "wooden"}, {{"brown", .60}, {"tan", .25}, {"orange", .15}}, {.55, .45, .45, .40}},
        {{"rose", "roses"}, {{"red", .60}, {"pink", .30}, {"green", .10}}, {.40, .30, .80, .50}},
        {{"purple", "violet"}, {{"purple", .80}, {"pink", .10}, {"navy", .10}}, {.30, .30, .70, .40}},
        {{"blue"}, {{"blue", .80}, {"sky", .20}}, {.30, .30, .70, .40}},
        {{"green"}, {{"green", .85}, {"yellow", .15}}, {.30, .30, .65, .45}},
        {{"yellow"}, {{"yellow", .85}, {"orange", .15}}, {.30, .30, .70, .70}},
        {{"orange"}, {{"orange", .85}, {"yellow", .15}}, {.30, .30, .75, .60}},
        {{"pink"}, {{"pink", .85}, {"white", .15}}, {.30, .30, .50, .70}},
        {{"brown"}, {{"brown", .85}, {"tan", .15}}, {.35, .30, .40, .35}},
        {{"white"}, {{"white", .90}, {"gray", .10}}, {.10, .10, .05, .90}},
        {{"black"}, {{"black", .90}, {"gray", .10}}, {.10, .10, .05, .10}},
        {{"gray", "grey"}, {{"gray", .90}, {"white", .10}}, {.20, .20, .05, .50}},
    };
    std::unordered_map<std::string, LexiconEntry> map;
    for (const auto& row : rows) {
      LexiconEntry entry;
      for (const auto& [name, weight] : row.colors) entry.palette[palette_index(name)] = weight;
      entry.texture = row.texture;
      for (const char* word : row.words) map.emplace(word, entry);
    }
    return map;
  }();
  return table;
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {"a",  "an", "the",  "of",   "with", "in", "on",
                                                        "and", "by", "to",   "for",  "like", "style", "styled",
                                                        "at", "as", "from", "into", "is"};
  return words;
}

torch::Tensor word_vector(const std::string& word) {
  auto out = torch::zeros({kConceptDim}, torch::kFloat64);
  auto acc = out.accessor<double, 1>();
  const auto& table = lexicon();
  if (const auto it = table.find(word); it != table.end()) {
    double total = 0.0;
    for (double w : it->second.palette) total += w;
    for (int64_t k = 0; k < kPaletteSize; ++k) acc[k] = std::sqrt(it->second.palette[k] / total);
    for (int64_t t = 0; t < kTextureDims; ++t) acc[kPaletteSize + t] = it->second.texture[t];
  } else {
    StableNormal rng(fnv1a(word));
    for (int64_t h = 0; h < kHashDims; ++h) acc[kPaletteSize + kTextureDims + h] = rng();
  }
  return out / out.norm();
}

}  // namespace

std::vector<std::string> LexiconTextEncoder::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !stopwords().contains(current)) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

bool LexiconTextEncoder::in_lexicon(const std::string& word) { return lexicon().contains(word); }

torch::Tensor LexiconTextEncoder::compute(const std::string& text) const {
  auto tokens = tokenize(text);
  if (tokens.empty()) {
    std::string lowered;
    for (unsigned char c : text) lowered.push_back(static_cast<char>(std::tolower(c)));
    tokens.push_back(lowered);
  }
  auto sum = torch::zeros({kConceptDim}, torch::kFloat64);
  for (const auto& token : tokens) sum += word_vector(token);
  return sum;
}

// ---------------------------------------------------------------------------
// Random conv backbone

RandomConvBackbone::RandomConvBackbone(uint64_t seed) {
  StableNormal rng(seed);
  const auto channels = tap_channels();
  int64_t in = 3;
  for (int64_t out : channels) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in * 9));
    weights_.push_back(stable_normal_tensor(rng, {out, in, 3, 3}, stddev));
    in = out;
  }
}

std::vector<torch::Tensor> RandomConvBackbone::forward(const torch::Tensor& image) const {
  auto x = image.dim() == 3 ? image.unsqueeze(0) : image;
  x = (x - 0.45) / 0.25;
  std::vector<torch::Tensor> taps;
  taps.reserve(weights_.size());
  for (size_t i = 0; i < weights_.size(); ++i) {
    if (i > 0) x = avg_pool(x, 2);
    auto padded = F::pad(x, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReflect));
    x = torch::relu(torch::conv2d(padded, weights_[i].to(x.scalar_type())));
    taps.push_back(x);
  }
  return taps;
}

ContentFeatureSet RandomConvContentExtractor::compute(const torch::Tensor& image) const {
  auto taps = backbone_.forward(image);
  ContentFeatureSet set;
  set.layers.emplace_back("s4", kFeatureGain * taps[2].squeeze(0));
  set.layers.emplace_back("s8", kFeatureGain * taps[3].squeeze(0));
  return set;
}

}  // namespace semcs::builtin
