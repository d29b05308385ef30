#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nmsp/graph.hpp"
#include "nmsp/parameters.hpp"
#include "nmsp/rng.hpp"

namespace nmsp {

enum class Activation { gelu, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct LayerConfig {
  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t ffn_width = 256;
  double dropout = 0.1;
  double layer_norm_eps = 1e-12;
  Activation activation = Activation::gelu;

  std::size_t head_width() const { return width / heads; }
  void validate() const;
};

struct AttentionHead {
  Tensor query_weight, query_bias;  // [d×d_k], [d_k]
  Tensor key_weight;  // no bias: a key shift moves every score of a row equally
  Tensor value_weight, value_bias;
};

// One post-norm transformer encoder layer: multi-head attention, Add&Norm,
// feed-forward, Add&Norm.
struct TransformerLayerParams {
  std::vector<AttentionHead> heads;
  Tensor output_weight, output_bias;  // [(h·d_k)×d], [d]
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ffn_in_weight, ffn_in_bias;    // [d×f], [f]
  Tensor ffn_out_weight, ffn_out_bias;  // [f×d], [d]
  Tensor output_norm_gain, output_norm_bias;

  static TransformerLayerParams create(const LayerConfig& config, double init_std, Rng& rng);
  void collect(const std::string& prefix, ParameterList& out);
};

// Per-head intermediates, captured on request.
struct AttentionTrace {
  Tensor q, k, v;
  Tensor att_scores;  // scaled scores after the additive mask
  Tensor weights;     // softmax(att_scores)
  Tensor head;        // weights·V (after attention dropout, if any)
};

// Queries come from `query_source`, keys and values from `key_value_source`,
// and the first residual adds `residual`. A standard self-attention layer
// passes the same Var for all three.
Var transformer_layer(Var query_source, Var key_value_source, Var residual, const Tensor& additive_mask,
                      TransformerLayerParams& params, const LayerConfig& config, bool training, Rng& rng,
                      std::vector<AttentionTrace>* trace = nullptr);

}  // namespace nmsp
