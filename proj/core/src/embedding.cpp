#include "nmsp/embedding.hpp"

#include <string>

#include "nmsp/errors.hpp"
#include "nmsp/ops.hpp"

namespace nmsp {
namespace {

Var embed_rows(Graph& g, std::span<const TokenId> word_ids, EmbeddingTables& t, bool training, Rng& rng) {
  const std::size_t n = word_ids.size();
  if (n > t.max_length()) {
    throw InputError("sequence length " + std::to_string(n) + " exceeds maximum " + std::to_string(t.max_length()));
  }
  std::vector<std::size_t> positions(n), types(n, 0);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  Var words = gather_rows(g.param(t.word), word_ids);
  Var pos = gather_rows(g.param(t.position), positions);
  Var type = gather_rows(g.param(t.token_type), types);
  Var e = layer_norm(add(add(words, pos), type), g.param(t.norm_gain), g.param(t.norm_bias), t.layer_norm_eps);
  return dropout(e, t.dropout, training, rng);
}

}  // namespace

EmbeddingTables EmbeddingTables::create(std::size_t vocab_size, std::size_t max_length, std::size_t width,
                                        double init_std, Rng& rng) {
  if (vocab_size < special::count) {
    throw ConfigError("vocabulary must hold at least the " + std::to_string(special::count) + " special tokens");
  }
  if (width == 0 || max_length == 0) throw ConfigError("embedding width and max length must be positive");
  EmbeddingTables t;
  t.word = normal_parameter({vocab_size, width}, init_std, rng);
  t.position = normal_parameter({max_length, width}, init_std, rng);
  t.token_type = normal_parameter({2, width}, init_std, rng);
  t.norm_gain = parameter({width}, 1.0);
  t.norm_bias = parameter({width}, 0.0);
  return t;
}

void EmbeddingTables::collect(const std::string& prefix, ParameterList& out) {
  out.push_back({prefix + "word", &word});
  out.push_back({prefix + "position", &position});
  out.push_back({prefix + "token_type", &token_type});
  out.push_back({prefix + "norm.gain", &norm_gain});
  out.push_back({prefix + "norm.bias", &norm_bias});
}

SequenceLayout make_layout(std::span<const TokenId> characters, std::size_t padded_total) {
  SequenceLayout layout;
  layout.characters = characters.size();
  layout.tokens.reserve(characters.size() + 2);
  layout.tokens.push_back(special::cls);
  layout.tokens.insert(layout.tokens.end(), characters.begin(), characters.end());
  layout.tokens.push_back(special::sep);
  if (padded_total != 0 && padded_total < layout.tokens.size()) {
    throw InputError("padded length " + std::to_string(padded_total) + " shorter than sequence " +
                     std::to_string(layout.tokens.size()));
  }
  layout.padding.assign(layout.tokens.size(), false);
  while (layout.tokens.size() < padded_total) {
    layout.tokens.push_back(special::pad);
    layout.padding.push_back(true);
  }
  return layout;
}

Var embed(Graph& g, std::span<const TokenId> tokens, EmbeddingTables& tables, bool training, Rng& rng) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= tables.vocab_size()) {
      throw InputError("token id " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                       " outside vocabulary of " + std::to_string(tables.vocab_size()));
    }
  }
  return embed_rows(g, tokens, tables, training, rng);
}

Var embed_mask_query(Graph& g, std::size_t length, EmbeddingTables& tables, bool training, Rng& rng) {
  const std::vector<TokenId> masks(length, tables.mask_token_id);
  return embed_rows(g, masks, tables, training, rng);
}

}  // namespace nmsp
