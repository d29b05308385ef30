#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nmsp/graph.hpp"
#include "nmsp/parameters.hpp"
#include "nmsp/rng.hpp"
#include "nmsp/vocab.hpp"

namespace nmsp {

// Per-character phonological and glyph features, indexed by TokenId.
// Special tokens carry empty entries and therefore encode to zero rows.
struct ModalityResources {
  std::vector<std::vector<std::size_t>> pronunciation;  // phoneme-symbol IDs, in reading order
  std::vector<std::vector<std::size_t>> glyph;          // component IDs
  std::vector<std::string> phoneme_symbols;             // symbol ID -> text
  std::size_t component_count = 0;

  std::size_t vocab_size() const { return pronunciation.size(); }
  void validate(std::size_t vocab_size) const;

  // `char TAB sym sym ...` and `char TAB id id ...`, UTF-8, one character per
  // line. Every non-special vocabulary character must be listed.
  static ModalityResources load(const std::filesystem::path& pronunciation_file,
                                const std::filesystem::path& glyph_file, const Vocabulary& vocab);
  void save(const std::filesystem::path& pronunciation_file, const std::filesystem::path& glyph_file,
            const Vocabulary& vocab) const;
};

// Recurrent phoneme reader: h_t = tanh(e(p_t)·W_in + h_{t-1}·W_state + b),
// output = h_T·W_out. No output bias, so empty sequences give zero rows.
struct PhoneticEncoder {
  Tensor symbol_embedding;  // [P×k]
  Tensor input_weight;      // [k×k]
  Tensor state_weight;      // [k×k]
  Tensor bias;              // [k]
  Tensor output_weight;     // [k×d]

  static PhoneticEncoder create(std::size_t symbols, std::size_t hidden, std::size_t width, double init_std, Rng& rng);
  void collect(const std::string& prefix, ParameterList& out);
};

// Bag of component embeddings, summed, then W_out (no bias).
struct GlyphEncoder {
  Tensor component_embedding;  // [C×k]
  Tensor output_weight;        // [k×d]

  static GlyphEncoder create(std::size_t components, std::size_t hidden, std::size_t width, double init_std, Rng& rng);
  void collect(const std::string& prefix, ParameterList& out);
};

Var encode_phonology(Graph& g, std::span<const TokenId> tokens, const ModalityResources& resources,
                     PhoneticEncoder& encoder, double dropout_rate, bool training, Rng& rng);
Var encode_glyph(Graph& g, std::span<const TokenId> tokens, const ModalityResources& resources,
                 GlyphEncoder& encoder, double dropout_rate, bool training, Rng& rng);

struct ModalityEncodings {
  Var semantic;       // H_s [n×d]
  Var semantic_mean;  // mean of the non-padding rows of H_s [1×d]
  Var phonetic;       // H_p [n×d]
  Var graphic;        // H_g [n×d]
};

ModalityEncodings make_modality_encodings(Var semantic, Var phonetic, Var graphic,
                                          const std::vector<bool>& padding = {});

struct GateValues {
  Var scores_p, scores_g;  // [n×1]
  Var gates_p, gates_g;    // [n×1]
};

// Scores_m = rowwise ⟨[H_s; H̄_s], [H_m; H_m]⟩, Gates_m = sigmoid(Scores_m).
// Parameter-free.
GateValues dot_product_gate(const ModalityEncodings& m);

// H_s + Gates_p ⊙ H_p + Gates_g ⊙ H_g, gates broadcast across the hidden axis.
Var fuse(const ModalityEncodings& m, const GateValues& gates);

}  // namespace nmsp
