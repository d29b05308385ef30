#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "nmsp/graph.hpp"
#include "nmsp/layer.hpp"

namespace nmsp {

enum class NGramMode { none, unigram, left_bigram, right_bigram, trigram };

std::string_view to_string(NGramMode mode);
// Accepts none, unigram, left_bigram, right_bigram, trigram; '-' may replace
// '_', and the short forms 1, 2L, 2R, 3 are recognised.
NGramMode parse_ngram_mode(std::string_view text);

// Additive score used to hide a key from a query row.
inline constexpr double kMaskScore = -10000.0;

// Row i lists the key positions hidden from query i, sorted ascending.
using MaskIndices = std::vector<std::vector<std::size_t>>;

// Layout is [cls] x₁ … x_m [sep] [pad]*. Each real row i hides itself and,
// depending on the mode, its left and/or right neighbour. [cls] and [sep] are
// never hidden as neighbours: the first character keeps [cls] visible and the
// last character keeps [sep] visible. [cls] does hide x₁ and [sep] hides x_m.
// Padding rows get an empty set. Mode none yields no rows.
MaskIndices build_mask_indices(NGramMode mode, std::size_t n_total, const std::vector<bool>& padding = {});

struct NGramAttentionMask {
  NGramMode mode = NGramMode::none;
  MaskIndices indices;
  Tensor additive;  // [n×n], kMaskScore at hidden (i, j), 0 elsewhere

  static NGramAttentionMask build(NGramMode mode, std::size_t n_total, const std::vector<bool>& padding = {});
  std::size_t length() const { return additive.rows(); }
};

// [n×n] with kMaskScore in every padding column, 0 elsewhere.
Tensor padding_attention_mask(const std::vector<bool>& padding);

// The inserted masked layer: queries from E_query, keys/values and the first
// residual from E_out, scores offset by the n-gram mask plus the padding mask.
// With mode none the layer is skipped and e_out is returned as is.
Var ngram_masked_layer(Var e_out, Var e_query, TransformerLayerParams& params, const LayerConfig& config,
                       const NGramAttentionMask& mask, const Tensor& padding_mask, bool training, Rng& rng,
                       std::vector<AttentionTrace>* trace = nullptr);

}  // namespace nmsp
