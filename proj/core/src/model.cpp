#include "nmsp/model.hpp"

#include <map>
#include <sstream>

#include "nmsp/errors.hpp"
#include "nmsp/key_value.hpp"
#include "nmsp/ops.hpp"

namespace nmsp {

LayerConfig ModelConfig::layer() const {
  LayerConfig c;
  c.width = width;
  c.heads = heads;
  c.ffn_width = ffn_width;
  c.dropout = dropout;
  c.layer_norm_eps = layer_norm_eps;
  c.activation = activation;
  return c;
}

void ModelConfig::validate() const {
  if (vocab_size < special::count) throw ConfigError("vocab-size must be at least " + std::to_string(special::count));
  if (max_length < 2) throw ConfigError("max-length must be at least 2");
  layer().validate();
  if (semantic_depth == 0) throw ConfigError("semantic-depth must be at least 1");
  if (fusion && fusion_depth == 0) throw ConfigError("fusion-depth must be at least 1");
  if (fusion && modality_width == 0) throw ConfigError("modality-width must be positive");
  if (!(init_std > 0.0)) throw ConfigError("init-std must be positive");
}

std::string ModelConfig::serialize() const {
  std::ostringstream out;
  out << "vocab-size = " << vocab_size << '\n'
      << "max-length = " << max_length << '\n'
      << "width = " << width << '\n'
      << "heads = " << heads << '\n'
      << "ffn-width = " << ffn_width << '\n'
      << "semantic-depth = " << semantic_depth << '\n'
      << "fusion-depth = " << fusion_depth << '\n'
      << "modality-width = " << modality_width << '\n'
      << "phoneme-count = " << phoneme_count << '\n'
      << "component-count = " << component_count << '\n'
      << "dropout = " << format_double(dropout) << '\n'
      << "layer-norm-eps = " << format_double(layer_norm_eps) << '\n'
      << "init-std = " << format_double(init_std) << '\n'
      << "activation = " << to_string(activation) << '\n'
      << "ngram = " << to_string(ngram) << '\n'
      << "fusion = " << (fusion ? "on" : "off") << '\n';
  return out.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig c;
  for (const auto& [key, value] : parse_key_values(text, "model config")) {
    if (key == "vocab-size") c.vocab_size = parse_size(value, key);
    else if (key == "max-length") c.max_length = parse_size(value, key);
    else if (key == "width") c.width = parse_size(value, key);
    else if (key == "heads") c.heads = parse_size(value, key);
    else if (key == "ffn-width") c.ffn_width = parse_size(value, key);
    else if (key == "semantic-depth") c.semantic_depth = parse_size(value, key);
    else if (key == "fusion-depth") c.fusion_depth = parse_size(value, key);
    else if (key == "modality-width") c.modality_width = parse_size(value, key);
    else if (key == "phoneme-count") c.phoneme_count = parse_size(value, key);
    else if (key == "component-count") c.component_count = parse_size(value, key);
    else if (key == "dropout") c.dropout = parse_double(value, key);
    else if (key == "layer-norm-eps") c.layer_norm_eps = parse_double(value, key);
    else if (key == "init-std") c.init_std = parse_double(value, key);
    else if (key == "activation") c.activation = parse_activation(value);
    else if (key == "ngram") c.ngram = parse_ngram_mode(value);
    else if (key == "fusion") c.fusion = parse_bool(value, key);
    else throw ConfigError("unknown model config key '" + key + "'");
  }
  c.validate();
  return c;
}

SpellerModel::SpellerModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const LayerConfig layer = config_.layer();
  embedding_ = EmbeddingTables::create(config_.vocab_size, config_.max_length, config_.width, config_.init_std, rng);
  embedding_.layer_norm_eps = config_.layer_norm_eps;
  embedding_.dropout = config_.dropout;
  // Each block draws from its own child stream so that adding or removing
  // the n-gram layer leaves every other initial value unchanged.
  Rng ngram_rng = rng.split();
  Rng semantic_rng = rng.split();
  Rng fusion_rng = rng.split();
  Rng output_rng = rng.split();
  if (config_.ngram != NGramMode::none) ngram_layer_ = TransformerLayerParams::create(layer, config_.init_std, ngram_rng);
  semantic_ = EncoderStack::create(layer, config_.semantic_depth, config_.init_std, semantic_rng);
  if (config_.fusion) {
    fusion_ = FusionParts{
        PhoneticEncoder::create(config_.phoneme_count, config_.modality_width, config_.width, config_.init_std, fusion_rng),
        GlyphEncoder::create(config_.component_count, config_.modality_width, config_.width, config_.init_std, fusion_rng),
        EncoderStack::create(layer, config_.fusion_depth, config_.init_std, fusion_rng)};
  }
  output_ = OutputProjection::create(config_.width, config_.vocab_size, config_.init_std, output_rng);
}

ParameterList SpellerModel::parameters() {
  ParameterList out;
  embedding_.collect("embedding.", out);
  if (ngram_layer_) ngram_layer_->collect("ngram.", out);
  semantic_.collect("semantic.", out);
  if (fusion_) {
    fusion_->phonetic.collect("phonetic.", out);
    fusion_->glyph.collect("glyph.", out);
    fusion_->encoder.collect("fusion.", out);
  }
  output_.collect("output.", out);
  return out;
}

void SpellerModel::set_resources(ModalityResources resources) {
  resources.validate(config_.vocab_size);
  if (resources.phoneme_symbols.size() != config_.phoneme_count || resources.component_count != config_.component_count) {
    throw ConfigError("modality tables have " + std::to_string(resources.phoneme_symbols.size()) + " phonemes / " +
                      std::to_string(resources.component_count) + " components, model expects " +
                      std::to_string(config_.phoneme_count) + " / " + std::to_string(config_.component_count));
  }
  resources_ = std::move(resources);
}

Var SpellerModel::forward(Graph& g, const SequenceLayout& layout, bool training, Rng& rng, Trace* trace) {
  const LayerConfig layer = config_.layer();
  const std::size_t n = layout.total();
  if (layout.padding.size() != n) throw ShapeError("layout padding flags do not match token count");

  Var e_out = embed(g, layout.tokens, embedding_, training, rng);
  const Tensor pad_mask = padding_attention_mask(layout.padding);

  Var hidden = e_out;
  const bool apply_ngram = ngram_layer_ && (training || inference_masking_);
  if (apply_ngram) {
    Var e_query = embed_mask_query(g, n, embedding_, training, rng);
    const auto mask = NGramAttentionMask::build(config_.ngram, n, layout.padding);
    hidden = ngram_masked_layer(e_out, e_query, *ngram_layer_, layer, mask, pad_mask, training, rng,
                                trace ? &trace->ngram_heads : nullptr);
  }
  if (trace) trace->ngram_applied = apply_ngram;

  Var semantic = encode(hidden, semantic_, layer, pad_mask, training, rng);
  if (trace) trace->semantic = semantic.value();
  if (!fusion_) return classify(semantic, output_);

  if (!resources_) throw ConfigError("fusion model used without modality resources");
  Var phonetic = encode_phonology(g, layout.tokens, *resources_, fusion_->phonetic, config_.dropout, training, rng);
  Var graphic = encode_glyph(g, layout.tokens, *resources_, fusion_->glyph, config_.dropout, training, rng);
  const ModalityEncodings modalities = make_modality_encodings(semantic, phonetic, graphic, layout.padding);
  const GateValues gates = dot_product_gate(modalities);
  Var fused = fuse(modalities, gates);
  if (trace) {
    trace->gates_p = gates.gates_p.value();
    trace->gates_g = gates.gates_g.value();
    trace->fusion = fused.value();
  }
  return classify(encode(fused, fusion_->encoder, layer, pad_mask, training, rng), output_);
}

}  // namespace nmsp
