#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmsp/embedding.hpp"
#include "nmsp/encoder.hpp"
#include "nmsp/fusion.hpp"
#include "nmsp/layer.hpp"
#include "nmsp/ngram_attention.hpp"

namespace nmsp {

// Architecture hyperparameters. fusion=false with ngram=none is the plain
// encoder baseline; fusion=false with a mode is the n-gram masked baseline;
// fusion=true gives the gated multi-modal model (masked when ngram != none).
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t max_length = 128;
  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t ffn_width = 256;
  std::size_t semantic_depth = 2;
  std::size_t fusion_depth = 3;
  std::size_t modality_width = 32;
  std::size_t phoneme_count = 0;
  std::size_t component_count = 0;
  double dropout = 0.1;
  double layer_norm_eps = 1e-12;
  double init_std = 0.02;
  Activation activation = Activation::gelu;
  NGramMode ngram = NGramMode::trigram;
  bool fusion = true;

  LayerConfig layer() const;
  void validate() const;

  // `key = value` lines in a fixed order; parse rejects unknown keys.
  std::string serialize() const;
  static ModelConfig parse(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class SpellerModel {
 public:
  struct Trace {
    bool ngram_applied = false;
    std::vector<AttentionTrace> ngram_heads;
    Tensor semantic;  // H_s
    Tensor gates_p, gates_g;
    Tensor fusion;
  };

  SpellerModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterList parameters();

  // Whether prediction runs the n-gram layer. Training always runs it.
  void set_inference_masking(bool active) noexcept { inference_masking_ = active; }
  bool inference_masking() const noexcept { return inference_masking_; }

  // Required before forward() when fusion is on; sizes must match the config.
  void set_resources(ModalityResources resources);
  const std::optional<ModalityResources>& resources() const noexcept { return resources_; }

  // Logits [n×V] for one laid-out sequence.
  Var forward(Graph& g, const SequenceLayout& layout, bool training, Rng& rng, Trace* trace = nullptr);

  bool has_ngram_layer() const noexcept { return ngram_layer_.has_value(); }

 private:
  ModelConfig config_;
  bool inference_masking_ = true;
  EmbeddingTables embedding_;
  std::optional<TransformerLayerParams> ngram_layer_;
  EncoderStack semantic_;
  struct FusionParts {
    PhoneticEncoder phonetic;
    GlyphEncoder glyph;
    EncoderStack encoder;
  };
  std::optional<FusionParts> fusion_;
  OutputProjection output_;
  std::optional<ModalityResources> resources_;
};

}  // namespace nmsp
