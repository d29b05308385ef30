#pragma once

#include <cstddef>
#include <vector>

#include "nmsp/graph.hpp"
#include "nmsp/layer.hpp"

namespace nmsp {

// Stack of standard self-attention layers (padding mask only).
struct EncoderStack {
  std::vector<TransformerLayerParams> layers;

  static EncoderStack create(const LayerConfig& config, std::size_t depth, double init_std, Rng& rng);
  std::size_t depth() const { return layers.size(); }
  void collect(const std::string& prefix, ParameterList& out);
};

Var encode(Var hidden, EncoderStack& stack, const LayerConfig& config, const Tensor& padding_mask, bool training,
           Rng& rng);

// Dense map to vocabulary logits. Softmax is left to the consumer.
struct OutputProjection {
  Tensor weight;  // [d×V]
  Tensor bias;    // [V]

  static OutputProjection create(std::size_t width, std::size_t vocab_size, double init_std, Rng& rng);
  void collect(const std::string& prefix, ParameterList& out);
};

Var classify(Var hidden, OutputProjection& projection);

}  // namespace nmsp
