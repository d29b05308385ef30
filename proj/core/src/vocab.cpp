#include "nmsp/vocab.hpp"

#include <array>
#include <fstream>

#include "nmsp/errors.hpp"

namespace nmsp {
namespace {

constexpr std::array<std::string_view, special::count> kSpecialTokens = {"[pad]", "[cls]", "[sep]", "[mask]",
                                                                         "[unk]"};

}  // namespace

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (lead < 0x80) len = 1;
    else if ((lead & 0xE0) == 0xC0) len = 2;
    else if ((lead & 0xF0) == 0xE0) len = 3;
    else if ((lead & 0xF8) == 0xF0) len = 4;
    else throw InputError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    if (i + len > text.size()) throw InputError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        throw InputError("invalid UTF-8 continuation byte at offset " + std::to_string(i + k));
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto tok : kSpecialTokens) add(std::string(tok));
}

void Vocabulary::add(std::string token) {
  if (index_.contains(token)) throw InputError("duplicate vocabulary token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::from_characters(const std::vector<std::string>& chars) {
  Vocabulary v;
  for (const auto& c : chars) v.add(c);
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  Vocabulary v;
  v.tokens_.clear();
  v.index_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no < special::count && line != kSpecialTokens[line_no]) {
      throw InputError(path.string() + ":" + std::to_string(line_no + 1) + ": expected " +
                       std::string(kSpecialTokens[line_no]) + ", got '" + line + "'");
    }
    if (line.empty()) throw InputError(path.string() + ":" + std::to_string(line_no + 1) + ": empty token");
    v.add(line);
    ++line_no;
  }
  if (line_no < special::count) throw InputError(path.string() + ": missing special tokens");
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& tok : tokens_) out << tok << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& ch : utf8_chars(text)) ids.push_back(id(ch));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += token(id);
  return out;
}

}  // namespace nmsp
