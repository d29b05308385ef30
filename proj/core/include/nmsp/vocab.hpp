#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nmsp {

using TokenId = std::size_t;

// Reserved IDs; a vocabulary file lists these tokens on its first five lines.
namespace special {
inline constexpr TokenId pad = 0;
inline constexpr TokenId cls = 1;
inline constexpr TokenId sep = 2;
inline constexpr TokenId mask = 3;
inline constexpr TokenId unk = 4;
inline constexpr std::size_t count = 5;
}  // namespace special

inline bool is_special(TokenId id) { return id < special::count; }

// Splits UTF-8 text into one string per code point. Throws InputError on
// malformed sequences.
std::vector<std::string> utf8_chars(std::string_view text);

// Character-level vocabulary. Line number in the file is the ID.
class Vocabulary {
 public:
  Vocabulary();  // special tokens only

  // Special tokens followed by `chars` in order. Duplicates are rejected.
  static Vocabulary from_characters(const std::vector<std::string>& chars);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const { return find(token).value_or(special::unk); }

  // One ID per character; unknown characters become [unk].
  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace nmsp
