#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nmsp/corpus.hpp"
#include "nmsp/model.hpp"
#include "nmsp/parameters.hpp"

namespace nmsp {

struct TrainConfig {
  NGramMode ngram = NGramMode::trigram;
  bool fusion = true;
  bool mask_at_inference = true;
  double learning_rate = 5e-5;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t ffn_width = 256;
  std::size_t semantic_depth = 2;
  std::size_t fusion_depth = 3;
  std::size_t modality_width = 32;
  std::size_t max_length = 128;
  double dropout = 0.1;
  double init_std = 0.02;
  Activation activation = Activation::gelu;

  void validate() const;
  // Model architecture for a given vocabulary and modality tables.
  ModelConfig model_config(std::size_t vocab_size, const ModalityResources& resources) const;
  std::string serialize() const;
};

// AdamW with decoupled weight decay:
//   m ← β₁m + (1-β₁)g, v ← β₂v + (1-β₂)g², θ ← θ - lr·(m̂/(√v̂ + ε) + λθ)
class AdamW {
 public:
  struct Options {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(const ParameterList& params, Options options);
  // Applies one update from the parameters' current gradients (missing
  // gradients count as zero).
  void step();
  std::size_t steps() const noexcept { return step_; }

 private:
  ParameterList params_;
  Options options_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::size_t step_ = 0;
};

struct TrainResult {
  std::vector<double> epoch_losses;  // mean batch loss per epoch
  std::size_t steps = 0;
};

// Called after each epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

// Mini-batch AdamW on cross-entropy over character positions. Deterministic
// for a given config seed. Throws DivergenceError on a non-finite loss.
TrainResult train(SpellerModel& model, const std::vector<SentencePair>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Mean cross-entropy over the character positions of a batch; sequences are
// run separately and their logits stacked. Throws InputError when the batch
// has no character position.
Var batch_loss(SpellerModel& model, Graph& g, std::span<const SentencePair> batch, bool training, Rng& rng);

// Same value with dropout off and no graph kept.
double batch_loss(SpellerModel& model, std::span<const SentencePair> batch);

// Per-character argmax over non-special tokens. Honors the model's
// inference-masking switch.
std::vector<TokenId> predict_sentence(SpellerModel& model, std::span<const TokenId> characters);
std::vector<std::vector<TokenId>> predict(SpellerModel& model, const std::vector<std::vector<TokenId>>& sentences);
std::vector<std::vector<TokenId>> predict_sources(SpellerModel& model, const std::vector<SentencePair>& pairs);

}  // namespace nmsp
