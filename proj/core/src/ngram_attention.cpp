#include "nmsp/ngram_attention.hpp"

#include <algorithm>
#include <string>

#include "nmsp/errors.hpp"

namespace nmsp {

std::string_view to_string(NGramMode mode) {
  switch (mode) {
    case NGramMode::none: return "none";
    case NGramMode::unigram: return "unigram";
    case NGramMode::left_bigram: return "left_bigram";
    case NGramMode::right_bigram: return "right_bigram";
    case NGramMode::trigram: return "trigram";
  }
  return "none";
}

NGramMode parse_ngram_mode(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "none") return NGramMode::none;
  if (s == "unigram" || s == "1") return NGramMode::unigram;
  if (s == "left_bigram" || s == "2L") return NGramMode::left_bigram;
  if (s == "right_bigram" || s == "2R") return NGramMode::right_bigram;
  if (s == "trigram" || s == "3") return NGramMode::trigram;
  throw ConfigError("unknown n-gram mode '" + std::string(text) + "'");
}

MaskIndices build_mask_indices(NGramMode mode, std::size_t n_total, const std::vector<bool>& padding) {
  if (mode == NGramMode::none) return {};
  if (n_total < 2) throw InputError("n-gram mask needs at least [cls] and [sep], got length " + std::to_string(n_total));
  if (!padding.empty() && padding.size() != n_total) {
    throw ShapeError("padding flags (" + std::to_string(padding.size()) + ") do not match length " +
                     std::to_string(n_total));
  }
  const auto is_pad = [&](std::size_t i) { return !padding.empty() && padding[i]; };
  const std::size_t real =
      padding.empty() ? n_total : static_cast<std::size_t>(std::count(padding.begin(), padding.end(), false));
  if (real < 2) throw InputError("sequence has no room for [cls] and [sep]");
  for (std::size_t i = 0; i < real; ++i) {
    if (is_pad(i)) throw InputError("padding must trail the sequence");
  }
  const std::size_t sep = real - 1;
  // [cls] and [sep] are never hidden as neighbours; they only lose themselves.
  const auto is_character = [sep](std::size_t j) { return j > 0 && j < sep; };

  const bool left = mode == NGramMode::left_bigram || mode == NGramMode::trigram;
  const bool right = mode == NGramMode::right_bigram || mode == NGramMode::trigram;

  MaskIndices rows(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    if (is_pad(i)) continue;
    auto& row = rows[i];
    if (left && i > 0 && is_character(i - 1)) row.push_back(i - 1);
    row.push_back(i);
    if (right && i < sep && is_character(i + 1)) row.push_back(i + 1);
  }
  return rows;
}

NGramAttentionMask NGramAttentionMask::build(NGramMode mode, std::size_t n_total, const std::vector<bool>& padding) {
  NGramAttentionMask m;
  m.mode = mode;
  m.indices = build_mask_indices(mode, n_total, padding);
  m.additive = Tensor({n_total, n_total});
  for (std::size_t i = 0; i < m.indices.size(); ++i)
    for (std::size_t j : m.indices[i]) m.additive.at(i, j) = kMaskScore;
  return m;
}

Tensor padding_attention_mask(const std::vector<bool>& padding) {
  const std::size_t n = padding.size();
  Tensor mask({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (padding[j]) mask.at(i, j) = kMaskScore;
  return mask;
}

Var ngram_masked_layer(Var e_out, Var e_query, TransformerLayerParams& params, const LayerConfig& config,
                       const NGramAttentionMask& mask, const Tensor& padding_mask, bool training, Rng& rng,
                       std::vector<AttentionTrace>* trace) {
  if (mask.mode == NGramMode::none) return e_out;
  const std::size_t n = e_out.rows();
  if (mask.length() != n || padding_mask.rows() != n || padding_mask.cols() != n) {
    throw ShapeError("ngram_masked_layer: masks built for a different length than " + std::to_string(n));
  }
  Tensor combined = mask.additive;
  for (std::size_t i = 0; i < combined.size(); ++i) combined[i] += padding_mask[i];
  return transformer_layer(e_query, e_out, e_out, combined, params, config, training, rng, trace);
}

}  // namespace nmsp
