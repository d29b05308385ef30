#include "nmsp/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "nmsp/errors.hpp"

namespace nmsp {
namespace {

std::string encode_utf8(std::uint32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xC0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    s += static_cast<char>(0xF0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return s;
}

constexpr const char* kInitials[] = {"b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j", "q", "x",
                                     "zh", "ch", "sh", "r", "z", "c", "s", "y", "w"};
constexpr const char* kFinals[] = {"a", "o", "e", "i", "u", "ai", "ei", "ao", "ou", "an", "en", "ang", "eng", "ong",
                                   "ia", "ie", "iu", "in", "ing", "ua", "uo", "ui", "un"};

void split_letters(const std::string& syllable, std::vector<std::string>& out) {
  for (char c : syllable) out.emplace_back(1, c);
}

}  // namespace

void SentencePair::validate() const {
  if (source.size() != target.size()) {
    throw InputError("source has " + std::to_string(source.size()) + " characters, target " +
                     std::to_string(target.size()));
  }
}

std::vector<std::size_t> SentencePair::correct_positions() const {
  validate();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < source.size(); ++i)
    if (source[i] == target[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> SentencePair::incorrect_positions() const {
  validate();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < source.size(); ++i)
    if (source[i] != target[i]) out.push_back(i);
  return out;
}

void ConfusionSet::validate(std::size_t vocab_size) const {
  for (const auto& [key, cands] : entries_) {
    if (key >= vocab_size) throw InputError("confusion key outside vocabulary");
    if (cands.empty()) throw InputError("confusion entry " + std::to_string(key) + " has no candidates");
    for (TokenId c : cands) {
      if (c == key) throw InputError("confusion entry " + std::to_string(key) + " lists itself");
      if (c >= vocab_size) throw InputError("confusion candidate outside vocabulary");
    }
  }
}

const std::vector<TokenId>* ConfusionSet::candidates(TokenId ch) const {
  const auto it = entries_.find(ch);
  return it == entries_.end() ? nullptr : &it->second;
}

ConfusionSet ConfusionSet::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open confusion set " + path.string());
  std::map<TokenId, std::vector<TokenId>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError(where + ": missing TAB");
    const auto key_chars = utf8_chars(line.substr(0, tab));
    if (key_chars.size() != 1) throw InputError(where + ": key must be one character");
    const auto key = vocab.find(key_chars[0]);
    if (!key) throw InputError(where + ": '" + key_chars[0] + "' not in vocabulary");
    auto& cands = entries[*key];
    for (const auto& ch : utf8_chars(line.substr(tab + 1))) {
      const auto id = vocab.find(ch);
      if (!id) throw InputError(where + ": candidate '" + ch + "' not in vocabulary");
      cands.push_back(*id);
    }
  }
  ConfusionSet set(std::move(entries));
  set.validate(vocab.size());
  return set;
}

void ConfusionSet::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write confusion set " + path.string());
  for (const auto& [key, cands] : entries_) {
    out << vocab.token(key) << '\t';
    for (TokenId c : cands) out << vocab.token(c);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

SyntheticWorld SyntheticWorld::create(std::size_t vocab_size, Rng& rng, std::size_t cluster_size, std::size_t branching) {
  if (cluster_size < 2) throw ConfigError("confusion clusters need at least two characters");
  if (vocab_size < special::count + cluster_size) {
    throw ConfigError("vocab-size " + std::to_string(vocab_size) + " leaves no room for a confusion cluster");
  }
  const std::size_t n_chars = vocab_size - special::count;
  SyntheticWorld w;

  std::vector<std::string> chars;
  for (std::size_t i = 0; i < n_chars; ++i) chars.push_back(encode_utf8(0x4E00 + static_cast<std::uint32_t>(i)));
  w.vocab = Vocabulary::from_characters(chars);

  // Shuffle real IDs into clusters; a short tail joins the last cluster.
  std::vector<TokenId> ids(n_chars);
  for (std::size_t i = 0; i < n_chars; ++i) ids[i] = special::count + i;
  for (std::size_t i = n_chars; i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  std::vector<std::vector<TokenId>> clusters;
  for (std::size_t i = 0; i < n_chars; i += cluster_size) {
    std::vector<TokenId> c(ids.begin() + static_cast<std::ptrdiff_t>(i),
                           ids.begin() + static_cast<std::ptrdiff_t>(std::min(n_chars, i + cluster_size)));
    if (c.size() < 2 && !clusters.empty()) {
      clusters.back().insert(clusters.back().end(), c.begin(), c.end());
    } else {
      clusters.push_back(std::move(c));
    }
  }

  std::map<TokenId, std::vector<TokenId>> confusion;
  for (const auto& c : clusters) {
    for (TokenId a : c) {
      auto& cands = confusion[a];
      for (TokenId b : c)
        if (b != a) cands.push_back(b);
    }
  }
  w.confusion = ConfusionSet(std::move(confusion));

  // Pronunciations: cluster syllable spelled letter by letter, then a tone
  // digit per member. Glyphs: cluster radical plus one private component.
  std::vector<std::vector<std::string>> spelled(vocab_size);
  std::vector<std::vector<std::size_t>> glyph(vocab_size);
  std::size_t next_component = clusters.size();
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const std::string syllable = std::string(kInitials[rng.below(std::size(kInitials))]) +
                                 kFinals[rng.below(std::size(kFinals))];
    for (std::size_t m = 0; m < clusters[ci].size(); ++m) {
      const TokenId id = clusters[ci][m];
      split_letters(syllable, spelled[id]);
      spelled[id].push_back(std::to_string(1 + m % 5));
      glyph[id] = {ci, next_component++};
    }
  }
  std::set<std::string> symbols;
  for (const auto& s : spelled) symbols.insert(s.begin(), s.end());
  w.resources.phoneme_symbols.assign(symbols.begin(), symbols.end());
  w.resources.pronunciation.resize(vocab_size);
  for (std::size_t id = 0; id < vocab_size; ++id) {
    for (const auto& s : spelled[id]) {
      const auto pos = std::lower_bound(w.resources.phoneme_symbols.begin(), w.resources.phoneme_symbols.end(), s);
      w.resources.pronunciation[id].push_back(static_cast<std::size_t>(pos - w.resources.phoneme_symbols.begin()));
    }
  }
  w.resources.glyph = std::move(glyph);
  w.resources.component_count = next_component;

  // Sparse chain: each character prefers a few successors with skewed weights.
  w.successors.assign(vocab_size, {});
  w.successor_weights.assign(vocab_size, {});
  const std::size_t fanout = std::min(branching, n_chars);
  for (std::size_t id = special::count; id < vocab_size; ++id) {
    std::vector<TokenId> pool = ids;
    double total = 0.0;
    for (std::size_t b = 0; b < fanout; ++b) {
      const std::size_t pick = b + rng.below(pool.size() - b);
      std::swap(pool[b], pool[pick]);
      w.successors[id].push_back(pool[b]);
      total += 1.0 / static_cast<double>(b + 1);
      w.successor_weights[id].push_back(total);
    }
    for (double& cw : w.successor_weights[id]) cw /= total;
  }
  return w;
}

std::vector<TokenId> SyntheticWorld::sample_sentence(std::size_t length, Rng& rng) const {
  std::vector<TokenId> out;
  out.reserve(length);
  const std::size_t n_chars = vocab.size() - special::count;
  for (std::size_t i = 0; i < length; ++i) {
    if (i == 0) {
      out.push_back(special::count + rng.below(n_chars));
      continue;
    }
    const auto& next = successors[out.back()];
    const auto& weights = successor_weights[out.back()];
    const double u = rng.uniform();
    const auto it = std::upper_bound(weights.begin(), weights.end(), u);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - weights.begin()), next.size() - 1);
    out.push_back(next[k]);
  }
  return out;
}

SentencePair corrupt(std::vector<TokenId> target, const ConfusionSet& confusion, double error_rate,
                     double adjacent_error_rate, Rng& rng) {
  if (!(error_rate >= 0.0 && error_rate < 1.0)) throw ConfigError("error-rate must lie in [0, 1)");
  if (!(adjacent_error_rate >= 0.0 && adjacent_error_rate <= 1.0)) {
    throw ConfigError("adjacent-error-rate must lie in [0, 1]");
  }
  if (confusion.empty()) throw ConfigError("confusion set is empty");
  SentencePair pair{target, target};
  const auto replace = [&](std::size_t i) {
    if (const auto* cands = confusion.candidates(target[i])) pair.source[i] = (*cands)[rng.below(cands->size())];
  };
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!rng.bernoulli(error_rate)) continue;
    replace(i);
    if (adjacent_error_rate > 0.0 && rng.bernoulli(adjacent_error_rate) && target.size() > 1) {
      replace(i + 1 < target.size() ? i + 1 : i - 1);
    }
  }
  return pair;
}

std::vector<SentencePair> generate_corpus(const SyntheticWorld& world, const CorpusOptions& o, Rng& rng) {
  if (o.min_length == 0 || o.min_length > o.max_length) throw ConfigError("invalid sentence length range");
  if (world.confusion.empty()) throw ConfigError("confusion set is empty");
  std::vector<SentencePair> pairs;
  pairs.reserve(o.n_sentences);
  for (std::size_t s = 0; s < o.n_sentences; ++s) {
    const std::size_t len = o.min_length + rng.below(o.max_length - o.min_length + 1);
    pairs.push_back(corrupt(world.sample_sentence(len, rng), world.confusion, o.error_rate, o.adjacent_error_rate, rng));
  }
  return pairs;
}

std::vector<SentencePair> load_corpus(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) throw InputError(where + ": expected 'source TAB target'");
    SentencePair p{vocab.encode(line.substr(0, tab)), vocab.encode(line.substr(tab + 1))};
    if (p.source.size() != p.target.size()) {
      throw InputError(where + ": source has " + std::to_string(p.source.size()) + " characters, target " +
                       std::to_string(p.target.size()));
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_corpus(const std::filesystem::path& path, const std::vector<SentencePair>& pairs, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& p : pairs) {
    p.validate();
    out << vocab.decode(p.source) << '\t' << vocab.decode(p.target) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace nmsp
