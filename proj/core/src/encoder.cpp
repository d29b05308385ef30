#include "nmsp/encoder.hpp"

#include <string>

#include "nmsp/errors.hpp"
#include "nmsp/ops.hpp"

namespace nmsp {

EncoderStack EncoderStack::create(const LayerConfig& config, std::size_t depth, double init_std, Rng& rng) {
  if (depth == 0) throw ConfigError("encoder depth must be at least 1");
  EncoderStack stack;
  stack.layers.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) stack.layers.push_back(TransformerLayerParams::create(config, init_std, rng));
  return stack;
}

void EncoderStack::collect(const std::string& prefix, ParameterList& out) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "layer" + std::to_string(i) + ".", out);
}

Var encode(Var hidden, EncoderStack& stack, const LayerConfig& config, const Tensor& padding_mask, bool training,
           Rng& rng) {
  if (stack.layers.empty()) throw ConfigError("encode: empty encoder stack");
  for (auto& layer : stack.layers) {
    hidden = transformer_layer(hidden, hidden, hidden, padding_mask, layer, config, training, rng);
  }
  return hidden;
}

OutputProjection OutputProjection::create(std::size_t width, std::size_t vocab_size, double init_std, Rng& rng) {
  OutputProjection p;
  p.weight = normal_parameter({width, vocab_size}, init_std, rng);
  p.bias = parameter({vocab_size});
  return p;
}

void OutputProjection::collect(const std::string& prefix, ParameterList& out) {
  out.push_back({prefix + "weight", &weight});
  out.push_back({prefix + "bias", &bias});
}

Var classify(Var hidden, OutputProjection& projection) {
  Graph& g = hidden.graph();
  if (hidden.cols() != projection.weight.rows()) {
    throw ShapeError("classify: hidden width " + std::to_string(hidden.cols()) + " vs projection " +
                     shape_string(projection.weight.shape()));
  }
  return affine(hidden, g.param(projection.weight), g.param(projection.bias));
}

}  // namespace nmsp
