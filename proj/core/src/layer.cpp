#include "nmsp/layer.hpp"

#include <cmath>

#include "nmsp/errors.hpp"
#include "nmsp/ops.hpp"

namespace nmsp {
namespace {

Var relu(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  const std::size_t xi = x.id();
  return x.graph().record("relu", std::move(out), {x}, [xi](Graph& g, std::size_t self) {
    const auto& go = g.grad(self);
    const Tensor& xv = g.value(xi);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += xv[i] > 0.0 ? go[i] : 0.0;
  });
}

Var activate(Var x, Activation a) { return a == Activation::gelu ? gelu(x) : relu(x); }

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::gelu ? "gelu" : "relu"; }

Activation parse_activation(std::string_view text) {
  if (text == "gelu") return Activation::gelu;
  if (text == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(text) + "'");
}

void LayerConfig::validate() const {
  if (width == 0 || heads == 0 || ffn_width == 0) throw ConfigError("layer dimensions must be positive");
  if (width % heads != 0) {
    throw ConfigError("width " + std::to_string(width) + " not divisible by " + std::to_string(heads) + " heads");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
}

TransformerLayerParams TransformerLayerParams::create(const LayerConfig& c, double init_std, Rng& rng) {
  c.validate();
  const std::size_t d = c.width, dk = c.head_width(), f = c.ffn_width;
  TransformerLayerParams p;
  for (std::size_t h = 0; h < c.heads; ++h) {
    AttentionHead head;
    head.query_weight = normal_parameter({d, dk}, init_std, rng);
    head.query_bias = parameter({dk});
    head.key_weight = normal_parameter({d, dk}, init_std, rng);
    head.value_weight = normal_parameter({d, dk}, init_std, rng);
    head.value_bias = parameter({dk});
    p.heads.push_back(std::move(head));
  }
  p.output_weight = normal_parameter({c.heads * dk, d}, init_std, rng);
  p.output_bias = parameter({d});
  p.attention_norm_gain = parameter({d}, 1.0);
  p.attention_norm_bias = parameter({d});
  p.ffn_in_weight = normal_parameter({d, f}, init_std, rng);
  p.ffn_in_bias = parameter({f});
  p.ffn_out_weight = normal_parameter({f, d}, init_std, rng);
  p.ffn_out_bias = parameter({d});
  p.output_norm_gain = parameter({d}, 1.0);
  p.output_norm_bias = parameter({d});
  return p;
}

void TransformerLayerParams::collect(const std::string& prefix, ParameterList& out) {
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const std::string hp = prefix + "head" + std::to_string(h) + ".";
    out.push_back({hp + "query.weight", &heads[h].query_weight});
    out.push_back({hp + "query.bias", &heads[h].query_bias});
    out.push_back({hp + "key.weight", &heads[h].key_weight});
    out.push_back({hp + "value.weight", &heads[h].value_weight});
    out.push_back({hp + "value.bias", &heads[h].value_bias});
  }
  out.push_back({prefix + "attention_output.weight", &output_weight});
  out.push_back({prefix + "attention_output.bias", &output_bias});
  out.push_back({prefix + "attention_norm.gain", &attention_norm_gain});
  out.push_back({prefix + "attention_norm.bias", &attention_norm_bias});
  out.push_back({prefix + "ffn_in.weight", &ffn_in_weight});
  out.push_back({prefix + "ffn_in.bias", &ffn_in_bias});
  out.push_back({prefix + "ffn_out.weight", &ffn_out_weight});
  out.push_back({prefix + "ffn_out.bias", &ffn_out_bias});
  out.push_back({prefix + "output_norm.gain", &output_norm_gain});
  out.push_back({prefix + "output_norm.bias", &output_norm_bias});
}

Var transformer_layer(Var query_source, Var key_value_source, Var residual, const Tensor& additive_mask,
                      TransformerLayerParams& p, const LayerConfig& c, bool training, Rng& rng,
                      std::vector<AttentionTrace>* trace) {
  const std::size_t n = key_value_source.rows();
  if (query_source.shape() != key_value_source.shape() || residual.shape() != key_value_source.shape()) {
    throw ShapeError("transformer_layer: query " + shape_string(query_source.shape()) + ", key/value " +
                     shape_string(key_value_source.shape()) + " and residual " + shape_string(residual.shape()) +
                     " must agree");
  }
  if (key_value_source.cols() != c.width) {
    throw ShapeError("transformer_layer: hidden width " + std::to_string(key_value_source.cols()) +
                     " does not match layer width " + std::to_string(c.width));
  }
  if (additive_mask.rows() != n || additive_mask.cols() != n || additive_mask.rank() != 2) {
    throw ShapeError("transformer_layer: attention mask " + shape_string(additive_mask.shape()) + " for length " +
                     std::to_string(n));
  }
  Graph& g = key_value_source.graph();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(c.head_width()));
  Var mask = g.constant(additive_mask);

  std::vector<Var> heads;
  heads.reserve(p.heads.size());
  for (auto& h : p.heads) {
    Var q = affine(query_source, g.param(h.query_weight), g.param(h.query_bias));
    Var k = matmul(key_value_source, g.param(h.key_weight));
    Var v = affine(key_value_source, g.param(h.value_weight), g.param(h.value_bias));
    Var scores = add(scale(matmul(q, transpose(k)), inv_sqrt_dk), mask);
    Var weights = softmax_rows(scores);
    Var head = matmul(dropout(weights, c.dropout, training, rng), v);
    if (trace) {
      trace->push_back({q.value(), k.value(), v.value(), scores.value(), weights.value(), head.value()});
    }
    heads.push_back(head);
  }
  Var attended = affine(concat_cols(heads), g.param(p.output_weight), g.param(p.output_bias));
  attended = dropout(attended, c.dropout, training, rng);
  Var hidden = layer_norm(add(attended, residual), g.param(p.attention_norm_gain), g.param(p.attention_norm_bias),
                          c.layer_norm_eps);

  Var inner = activate(affine(hidden, g.param(p.ffn_in_weight), g.param(p.ffn_in_bias)), c.activation);
  Var ffn = dropout(affine(inner, g.param(p.ffn_out_weight), g.param(p.ffn_out_bias)), c.dropout, training, rng);
  return layer_norm(add(ffn, hidden), g.param(p.output_norm_gain), g.param(p.output_norm_bias), c.layer_norm_eps);
}

}  // namespace nmsp
