#include <fstream>
#include <sstream>

#include "json.hpp"
#include "semcs/pipeline.hpp"

namespace semcs {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError("config key '" + key + "' has the wrong type: " + e.what());
  }
}

void apply_encoders(const json& node, EncoderConfig& encoders) {
  if (node.is_string()) {
    const auto preset = node.get<std::string>();
    if (preset == "builtin") {
      const auto dir = encoders.weights_dir;
      encoders = EncoderConfig::builtin();
      encoders.weights_dir = dir;
    } else if (preset == "pretrained") {
      const auto dir = encoders.weights_dir;
      encoders = EncoderConfig::pretrained();
      encoders.weights_dir = dir;
    } else {
      throw ConfigurationError("unknown encoder preset '" + preset + "' (expected builtin or pretrained)");
    }
    return;
  }
  if (!node.is_object()) throw ConfigurationError("'encoders' must be a preset name or an object");
  for (const auto& [key, value] : node.items()) {
    if (key == "dense") {
      encoders.dense = get_as<std::string>(value, key);
    } else if (key == "image") {
      encoders.image = get_as<std::string>(value, key);
    } else if (key == "text") {
      encoders.text = get_as<std::string>(value, key);
    } else if (key == "content") {
      encoders.content = get_as<std::string>(value, key);
    } else if (key == "weights_dir") {
      encoders.weights_dir = get_as<std::string>(value, key);
    } else {
      throw ConfigurationError("unknown encoders key '" + key + "'");
    }
  }
}

void apply_saliency(const json& node, SaliencyParams& saliency) {
  if (!node.is_object()) throw ConfigurationError("'saliency' must be an object");
  for (const auto& [key, value] : node.items()) {
    if (key == "eigenpairs") {
      saliency.eigenpairs = get_as<int64_t>(value, key);
    } else if (key == "min_coverage") {
      saliency.min_coverage = get_as<double>(value, key);
    } else if (key == "max_coverage") {
      saliency.max_coverage = get_as<double>(value, key);
    } else if (key == "uniform_affinity") {
      saliency.uniform_affinity = get_as<double>(value, key);
    } else {
      throw ConfigurationError("unknown saliency key '" + key + "'");
    }
  }
}

}  // namespace

RunRequest apply_config_document(std::string_view json_text, RunRequest base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigurationError("config document must be a JSON object");

  auto& config = base.config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "content") {
      base.content = get_as<std::string>(value, key);
    } else if (key == "text") {
      base.text = get_as<std::string>(value, key);
    } else if (key == "out") {
      config.output_path = get_as<std::string>(value, key);
    } else if (key == "mask-out") {
      config.mask_path = get_as<std::string>(value, key);
    } else if (key == "log") {
      config.log_path = get_as<std::string>(value, key);
    } else if (key == "checkpoint") {
      config.checkpoint_path = get_as<std::string>(value, key);
    } else if (key == "iters") {
      config.iterations = get_as<int64_t>(value, key);
    } else if (key == "lr") {
      config.learning_rate = get_as<double>(value, key);
    } else if (key == "lambda-bg") {
      config.weights.background = get_as<double>(value, key);
    } else if (key == "lambda-content") {
      config.weights.content = get_as<double>(value, key);
    } else if (key == "lambda-tv") {
      config.weights.tv = get_as<double>(value, key);
    } else if (key == "seed") {
      config.seed = get_as<uint64_t>(value, key);
    } else if (key == "resolution") {
      config.resolution = get_as<int64_t>(value, key);
    } else if (key == "force-global") {
      config.force_global = get_as<bool>(value, key);
    } else if (key == "mask-free") {
      config.mask_free = get_as<bool>(value, key);
    } else if (key == "encoders") {
      apply_encoders(value, config.encoders);
    } else if (key == "weights-dir") {
      config.encoders.weights_dir = get_as<std::string>(value, key);
    } else if (key == "saliency") {
      apply_saliency(value, config.saliency);
    } else {
      throw ConfigurationError("unknown config key '" + key + "'");
    }
  }
  return base;
}

RunRequest load_config_file(const std::filesystem::path& path, RunRequest base) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return apply_config_document(text.str(), std::move(base));
}

std::string config_to_json(const TransferConfig& config) {
  json doc = {
      {"iters", config.iterations},
      {"lr", config.learning_rate},
      {"lambda-bg", config.weights.background},
      {"lambda-content", config.weights.content},
      {"lambda-tv", config.weights.tv},
      {"seed", config.seed},
      {"resolution", config.resolution},
      {"force-global", config.force_global},
      {"mask-free", config.mask_free},
      {"encoders",
       {{"dense", config.encoders.dense},
        {"image", config.encoders.image},
        {"text", config.encoders.text},
        {"content", config.encoders.content},
        {"weights_dir", config.encoders.weights_dir.string()}}},
      {"saliency",
       {{"eigenpairs", config.saliency.eigenpairs},
        {"min_coverage", config.saliency.min_coverage},
        {"max_coverage", config.saliency.max_coverage},
        {"uniform_affinity", config.saliency.uniform_affinity}}},
  };
  if (!config.output_path.empty()) doc["out"] = config.output_path.string();
  if (!config.mask_path.empty()) doc["mask-out"] = config.mask_path.string();
  if (!config.log_path.empty()) doc["log"] = config.log_path.string();
  if (!config.checkpoint_path.empty()) doc["checkpoint"] = config.checkpoint_path.string();
  return doc.dump(2);
}

}  // namespace semcs
