#include "semcs/style_network.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "semcs/error.hpp"
#include "semcs/random.hpp"

namespace semcs {

namespace F = torch::nn::functional;

namespace {

constexpr double kLeakySlope = 0.2;
constexpr std::array<char, 8> kMagic{'S', 'E', 'M', 'C', 'S', 'N', 'E', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

torch::Tensor act(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
}

torch::Tensor upsample2(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .scale_factor(std::vector<double>{2.0, 2.0})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

class Runner {
 public:
  explicit Runner(const StyleNetParams& params) : params_(params) {}

  torch::Tensor conv(const torch::Tensor& x, const std::string& name) const {
    const auto& w = params_.get(name + ".weight");
    const auto& b = params_.get(name + ".bias");
    const int64_t kernel = w.size(2);
    const int64_t stride = stride_of(name);
    return torch::conv2d(x, w, b, stride, kernel / 2);
  }

  torch::Tensor block(const torch::Tensor& x, const std::string& first, const std::string& second) const {
    return act(conv(act(conv(x, first)), second));
  }

 private:
  static int64_t stride_of(const std::string& name) {
    for (const auto& spec : stylenet_layers()) {
      if (spec.name == name) return spec.stride;
    }
    throw std::logic_error("unknown layer " + name);
  }

  const StyleNetParams& params_;
};

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigurationError("truncated checkpoint");
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto size = read_pod<uint32_t>(in);
  if (size > (1U << 16)) throw ConfigurationError("corrupt checkpoint string length");
  std::string s(size, '\0');
  in.read(s.data(), size);
  if (!in) throw ConfigurationError("truncated checkpoint");
  return s;
}

}  // namespace

const std::vector<ConvSpec>& stylenet_layers() {
  static const std::vector<ConvSpec> layers = {
      {"enc0a", 3, 16, 3, 1},    {"enc0b", 16, 16, 3, 1},   {"down1a", 16, 32, 3, 2},  {"down1b", 32, 32, 3, 1},
      {"down2a", 32, 64, 3, 2},  {"down2b", 64, 64, 3, 1},  {"down3a", 64, 128, 3, 2}, {"down3b", 128, 128, 3, 1},
      {"res1a", 128, 128, 3, 1}, {"res1b", 128, 128, 3, 1}, {"res2a", 128, 128, 3, 1}, {"res2b", 128, 128, 3, 1},
      {"up3a", 128, 64, 3, 1},   {"up3b", 128, 64, 3, 1},   {"up2a", 64, 32, 3, 1},    {"up2b", 64, 32, 3, 1},
      {"up1a", 32, 16, 3, 1},    {"up1b", 32, 16, 3, 1},    {"out", 16, 3, 1, 1},
  };
  return layers;
}

int64_t StyleNetParams::parameter_count() const {
  int64_t total = 0;
  for (const auto& [name, t] : tensors) total += t.numel();
  return total;
}

std::vector<torch::Tensor> StyleNetParams::trainable() const {
  std::vector<torch::Tensor> out;
  out.reserve(tensors.size());
  for (const auto& [name, t] : tensors) out.push_back(t);
  return out;
}

const torch::Tensor& StyleNetParams::get(const std::string& name) const {
  for (const auto& [key, t] : tensors) {
    if (key == name) return t;
  }
  throw InvalidInput("style network has no parameter '" + name + "'");
}

StyleNetParams StyleNetParams::clone() const {
  StyleNetParams copy{{}, seed, architecture_id};
  for (const auto& [name, t] : tensors) copy.tensors.emplace_back(name, t.detach().clone());
  return copy;
}

StyleNetParams StyleNetParams::to(torch::ScalarType dtype) const {
  StyleNetParams copy{{}, seed, architecture_id};
  for (const auto& [name, t] : tensors) copy.tensors.emplace_back(name, t.detach().to(dtype).clone());
  return copy;
}

StyleNetParams init_stylenet(uint64_t seed, torch::ScalarType dtype) {
  StableNormal rng(seed);
  StyleNetParams params{{}, seed, kStyleNetArchitecture};
  const double gain = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));
  for (const auto& spec : stylenet_layers()) {
    const int64_t fan_in = spec.in_channels * spec.kernel * spec.kernel;
    const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
    auto weight = torch::empty({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}, torch::kFloat64);
    auto* w = weight.data_ptr<double>();
    for (int64_t i = 0; i < weight.numel(); ++i) w[i] = (2.0 * rng.uniform() - 1.0) * bound;
    params.tensors.emplace_back(spec.name + ".weight", weight.to(dtype));
    params.tensors.emplace_back(spec.name + ".bias", torch::zeros({spec.out_channels}, dtype));
  }
  return params;
}

torch::Tensor stylize(const StyleNetParams& params, const torch::Tensor& image) {
  if (params.architecture_id != kStyleNetArchitecture) {
    throw InvalidInput("unsupported style network architecture '" + params.architecture_id + "'");
  }
  if (image.dim() != 3 || image.size(0) != 3) throw InvalidInput("stylize expects a [3, H, W] image");
  for (const auto& [name, t] : params.tensors) {
    if (!torch::isfinite(t.detach()).all().item<bool>()) {
      throw NumericError("style network parameter '" + name + "' is not finite");
    }
  }

  const int64_t h = image.size(1);
  const int64_t w = image.size(2);
  const int64_t pad_h = (kStyleNetDownsampling - h % kStyleNetDownsampling) % kStyleNetDownsampling;
  const int64_t pad_w = (kStyleNetDownsampling - w % kStyleNetDownsampling) % kStyleNetDownsampling;
  auto x = image.unsqueeze(0).to(params.tensors.front().second.scalar_type());
  if (pad_h > 0 || pad_w > 0) {
    const bool reflectable = pad_h < h && pad_w < w;
    F::PadFuncOptions::mode_t mode = torch::kReplicate;
    if (reflectable) mode = torch::kReflect;
    x = F::pad(x, F::PadFuncOptions({0, pad_w, 0, pad_h}).mode(mode));
  }

  const Runner net(params);
  auto e0 = net.block(x, "enc0a", "enc0b");
  auto e1 = net.block(e0, "down1a", "down1b");
  auto e2 = net.block(e1, "down2a", "down2b");
  auto r = net.block(e2, "down3a", "down3b");
  r = r + net.conv(act(net.conv(r, "res1a")), "res1b");
  r = r + net.conv(act(net.conv(r, "res2a")), "res2b");
  auto u = act(net.conv(upsample2(r), "up3a"));
  u = act(net.conv(torch::cat({u, e2}, 1), "up3b"));
  u = act(net.conv(upsample2(u), "up2a"));
  u = act(net.conv(torch::cat({u, e1}, 1), "up2b"));
  u = act(net.conv(upsample2(u), "up1a"));
  u = act(net.conv(torch::cat({u, e0}, 1), "up1b"));
  auto out = torch::sigmoid(net.conv(u, "out"));
  return out.squeeze(0).narrow(1, 0, h).narrow(2, 0, w);
}

void save_checkpoint(const std::filesystem::path& path, const StyleNetParams& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write checkpoint: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_pod(out, kCheckpointVersion);
  write_string(out, params.architecture_id);
  write_pod(out, params.seed);
  write_pod(out, static_cast<uint32_t>(params.tensors.size()));
  for (const auto& [name, tensor] : params.tensors) {
    auto t = tensor.detach().contiguous();
    const bool is_double = t.scalar_type() == torch::kFloat64;
    if (!is_double) t = t.to(torch::kFloat32);
    write_string(out, name);
    write_pod(out, static_cast<uint8_t>(is_double ? 1 : 0));
    write_pod(out, static_cast<uint32_t>(t.dim()));
    for (int64_t d : t.sizes()) write_pod(out, d);
    out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
  }
  if (!out) throw InvalidInput("failed writing checkpoint: " + path.string());
}

StyleNetParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigurationError(path.string() + " is not a style network checkpoint");
  if (const auto version = read_pod<uint32_t>(in); version != kCheckpointVersion) {
    throw ConfigurationError("unsupported checkpoint version " + std::to_string(version));
  }
  StyleNetParams params;
  params.architecture_id = read_string(in);
  if (params.architecture_id != kStyleNetArchitecture) {
    throw ConfigurationError("checkpoint architecture '" + params.architecture_id + "' is not " +
                             kStyleNetArchitecture);
  }
  params.seed = read_pod<uint64_t>(in);
  const auto count = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < count; ++i) {
    auto name = read_string(in);
    const auto dtype = read_pod<uint8_t>(in) == 1 ? torch::kFloat64 : torch::kFloat32;
    const auto ndim = read_pod<uint32_t>(in);
    if (ndim > 8) throw ConfigurationError("corrupt checkpoint tensor rank");
    std::vector<int64_t> shape(ndim);
    for (auto& d : shape) d = read_pod<int64_t>(in);
    auto t = torch::empty(shape, dtype);
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
    if (!in) throw ConfigurationError("truncated checkpoint tensor '" + name + "'");
    params.tensors.emplace_back(std::move(name), std::move(t));
  }

  const auto reference = init_stylenet(0);
  if (reference.tensors.size() != params.tensors.size()) throw ConfigurationError("checkpoint tensor count mismatch");
  for (size_t i = 0; i < reference.tensors.size(); ++i) {
    if (reference.tensors[i].first != params.tensors[i].first ||
        reference.tensors[i].second.sizes() != params.tensors[i].second.sizes()) {
      throw ConfigurationError("checkpoint tensor '" + params.tensors[i].first + "' does not match the architecture");
    }
  }
  return params;
}

}  // namespace semcs
