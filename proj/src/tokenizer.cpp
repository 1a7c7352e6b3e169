#include "semcs/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>

#include "semcs/error.hpp"

namespace semcs {

namespace {

std::string utf8(uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

// GPT-2 style reversible byte -> printable code point table, in vocabulary order.
std::vector<std::pair<int, uint32_t>> byte_table() {
  std::vector<std::pair<int, uint32_t>> table;
  std::vector<bool> printable(256, false);
  auto add_range = [&](int lo, int hi) {
    for (int b = lo; b <= hi; ++b) {
      printable[b] = true;
      table.emplace_back(b, static_cast<uint32_t>(b));
    }
  };
  add_range('!', '~');
  add_range(0xA1, 0xAC);
  add_range(0xAE, 0xFF);
  uint32_t next = 0;
  for (int b = 0; b < 256; ++b) {
    if (!printable[b]) table.emplace_back(b, 256 + next++);
  }
  return table;
}

// Number of bytes in the UTF-8 sequence starting with `lead`.
size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

enum class CharClass { letter, digit, space, other };

CharClass classify(unsigned char lead) {
  if (lead >= 0x80) return CharClass::letter;
  if (std::isalpha(lead)) return CharClass::letter;
  if (std::isdigit(lead)) return CharClass::digit;
  if (std::isspace(lead)) return CharClass::space;
  return CharClass::other;
}

}  // namespace

ClipTokenizer::ClipTokenizer(std::vector<std::pair<std::string, std::string>> merges) {
  byte_symbol_.resize(256);
  std::vector<std::string> vocab;
  for (const auto& [byte, cp] : byte_table()) {
    byte_symbol_[byte] = utf8(cp);
    vocab.push_back(byte_symbol_[byte]);
  }
  const size_t base = vocab.size();
  for (size_t i = 0; i < base; ++i) vocab.push_back(vocab[i] + "</w>");
  for (size_t rank = 0; rank < merges.size(); ++rank) {
    const auto& [left, right] = merges[rank];
    vocab.push_back(left + right);
    merge_rank_.emplace(left + " " + right, rank);
  }
  vocab.emplace_back("<|startoftext|>");
  vocab.emplace_back("<|endoftext|>");
  for (size_t i = 0; i < vocab.size(); ++i) encoder_.emplace(vocab[i], static_cast<int64_t>(i));
  start_ = static_cast<int64_t>(vocab.size()) - 2;
  end_ = static_cast<int64_t>(vocab.size()) - 1;
}

ClipTokenizer ClipTokenizer::from_file(const std::filesystem::path& path, size_t max_merges) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("missing tokenizer vocabulary file: " + path.string());
  std::string line;
  std::getline(in, line);  // version header
  std::vector<std::pair<std::string, std::string>> merges;
  while (merges.size() < max_merges && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ConfigurationError("malformed merge line in " + path.string() + ": " + line);
    merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return ClipTokenizer(std::move(merges));
}

std::vector<std::string> ClipTokenizer::pre_tokenize(std::string_view raw) {
  // Whitespace collapse + lowercase, then the CLIP split pattern:
  // special tokens | contractions | letters+ | single digit | other+
  std::string text;
  for (unsigned char c : raw) text.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));

  static const std::vector<std::string> kSpecial = {"<|startoftext|>", "<|endoftext|>"};
  static const std::vector<std::string> kContractions = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};

  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    const auto cls = classify(lead);
    if (cls == CharClass::space) {
      ++i;
      continue;
    }
    bool matched = false;
    for (const auto& special : kSpecial) {
      if (text.compare(i, special.size(), special) == 0) {
        tokens.push_back(special);
        i += special.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (lead == '\'') {
      for (const auto& contraction : kContractions) {
        if (text.compare(i, contraction.size(), contraction) == 0) {
          tokens.push_back(contraction);
          i += contraction.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (cls == CharClass::digit) {
      tokens.emplace_back(1, text[i]);
      ++i;
      continue;
    }
    const size_t start = i;
    while (i < text.size()) {
      const auto c = static_cast<unsigned char>(text[i]);
      if (classify(c) != cls) break;
      i += std::min(utf8_length(c), text.size() - i);
    }
    tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::vector<std::string> ClipTokenizer::bpe(const std::string& token) const {
  std::vector<std::string> word;
  for (unsigned char byte : token) word.push_back(byte_symbol_[byte]);
  if (word.empty()) return word;
  word.back() += "</w>";

  while (word.size() > 1) {
    size_t best_rank = std::numeric_limits<size_t>::max();
    size_t best_at = 0;
    for (size_t i = 0; i + 1 < word.size(); ++i) {
      const auto it = merge_rank_.find(word[i] + " " + word[i + 1]);
      if (it != merge_rank_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_at = i;
      }
    }
    if (best_rank == std::numeric_limits<size_t>::max()) break;
    const std::string left = word[best_at];
    const std::string right = word[best_at + 1];
    // Merge every occurrence of the best pair, left to right.
    std::vector<std::string> merged;
    for (size_t i = 0; i < word.size();) {
      if (i + 1 < word.size() && word[i] == left && word[i + 1] == right) {
        merged.push_back(left + right);
        i += 2;
      } else {
        merged.push_back(word[i]);
        ++i;
      }
    }
    word = std::move(merged);
  }
  return word;
}

std::vector<int64_t> ClipTokenizer::encode(std::string_view text) const {
  std::vector<int64_t> ids;
  for (const auto& piece : pre_tokenize(text)) {
    if (piece == "<|startoftext|>" || piece == "<|endoftext|>") {
      ids.push_back(encoder_.at(piece));
      continue;
    }
    for (const auto& symbol : bpe(piece)) {
      const auto it = encoder_.find(symbol);
      if (it == encoder_.end()) throw InvalidInput("token outside vocabulary: " + symbol);
      ids.push_back(it->second);
    }
  }
  return ids;
}

torch::Tensor ClipTokenizer::tokenize(std::string_view text, int64_t context_length) const {
  std::vector<int64_t> ids{start_};
  auto body = encode(text);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(end_);
  if (static_cast<int64_t>(ids.size()) > context_length) {
    ids.resize(static_cast<size_t>(context_length));
    ids.back() = end_;
  }
  auto out = torch::zeros({1, context_length}, torch::kInt64);
  auto acc = out.accessor<int64_t, 2>();
  for (size_t i = 0; i < ids.size(); ++i) acc[0][static_cast<int64_t>(i)] = ids[i];
  return out;
}

}  // namespace semcs
