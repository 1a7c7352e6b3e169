#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace semcs {

/// Byte-level BPE tokenizer compatible with the CLIP text encoder's vocabulary.
///
/// Vocabulary order: the 256 byte symbols, the same symbols with an
/// end-of-word marker, one entry per merge, then the start/end tokens.
class ClipTokenizer {
 public:
  /// CLIP keeps the first 49152 - 256 - 2 merges of its vocabulary file.
  static constexpr size_t kMaxMerges = 49152 - 256 - 2;
  static constexpr int64_t kContextLength = 77;

  explicit ClipTokenizer(std::vector<std::pair<std::string, std::string>> merges);

  /// Reads a merges file: one header line, then "left right" per line.
  static ClipTokenizer from_file(const std::filesystem::path& path, size_t max_merges = kMaxMerges);

  /// BPE ids for `text` without start/end markers.
  [[nodiscard]] std::vector<int64_t> encode(std::string_view text) const;

  /// [1, context_length] int64 ids: start, tokens, end, zero padding.
  /// Overlong inputs are truncated and the last slot forced to the end token.
  [[nodiscard]] torch::Tensor tokenize(std::string_view text, int64_t context_length = kContextLength) const;

  [[nodiscard]] int64_t start_token() const noexcept { return start_; }
  [[nodiscard]] int64_t end_token() const noexcept { return end_; }
  [[nodiscard]] size_t vocab_size() const noexcept { return encoder_.size(); }

  /// Splits lowercased text into the pre-tokens the BPE runs on.
  /// Non-ASCII code points are treated as letters.
  [[nodiscard]] static std::vector<std::string> pre_tokenize(std::string_view text);

 private:
  [[nodiscard]] std::vector<std::string> bpe(const std::string& token) const;

  std::vector<std::string> byte_symbol_;  // byte -> UTF-8 symbol
  std::unordered_map<std::string, int64_t> encoder_;
  std::unordered_map<std::string, size_t> merge_rank_;  // "left right" -> rank
  int64_t start_ = 0;
  int64_t end_ = 0;
};

}  // namespace semcs
