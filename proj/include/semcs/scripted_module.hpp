#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <torch/script.h>

namespace semcs::scripted {

/// A loaded TorchScript module in eval mode. jit::Module::forward is not
/// const, so calls are serialized per instance.
class ScriptedModule {
 public:
  /// Throws ConfigurationError if the file cannot be loaded.
  explicit ScriptedModule(const std::filesystem::path& path);

  /// Failures inside the module surface as NumericError.
  torch::jit::IValue run(std::vector<torch::jit::IValue> inputs) const;

  /// Tensor attribute of the module; ConfigurationError if absent.
  [[nodiscard]] torch::Tensor tensor_attr(const std::string& name) const;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  mutable torch::jit::Module module_;
  mutable std::mutex mutex_;
  std::filesystem::path path_;
};

}  // namespace semcs::scripted
