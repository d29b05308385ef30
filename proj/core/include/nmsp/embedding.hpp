#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nmsp/graph.hpp"
#include "nmsp/parameters.hpp"
#include "nmsp/rng.hpp"
#include "nmsp/vocab.hpp"

namespace nmsp {

// Word/position/token-type tables plus the embedding LayerNorm. The same
// object serves the sentence path and the [mask]-query path, so position and
// type rows (and the norm) are shared by reference.
struct EmbeddingTables {
  Tensor word;        // [V×d]
  Tensor position;    // [L_max×d]
  Tensor token_type;  // [T×d]
  Tensor norm_gain;   // [d]
  Tensor norm_bias;   // [d]
  TokenId mask_token_id = special::mask;
  double layer_norm_eps = 1e-12;
  double dropout = 0.1;

  static EmbeddingTables create(std::size_t vocab_size, std::size_t max_length, std::size_t width,
                                double init_std, Rng& rng);

  std::size_t vocab_size() const { return word.rows(); }
  std::size_t max_length() const { return position.rows(); }
  std::size_t width() const { return word.cols(); }

  void collect(const std::string& prefix, ParameterList& out);
};

// [cls] x₁ … x_m [sep] [pad]*, with a padding flag per position.
struct SequenceLayout {
  std::vector<TokenId> tokens;
  std::vector<bool> padding;
  std::size_t characters = 0;

  std::size_t total() const { return tokens.size(); }
  std::size_t real_length() const { return characters + 2; }
};

// padded_total = 0 means no padding.
SequenceLayout make_layout(std::span<const TokenId> characters, std::size_t padded_total = 0);

// E_out: LayerNorm(word + position + type), then dropout. [n×d]
Var embed(Graph& g, std::span<const TokenId> tokens, EmbeddingTables& tables, bool training, Rng& rng);

// E_query: the same pipeline with the [mask] row at every position. Depends
// only on `length`. [length×d]
Var embed_mask_query(Graph& g, std::size_t length, EmbeddingTables& tables, bool training, Rng& rng);

}  // namespace nmsp
