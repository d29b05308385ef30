#include "nmsp/trainer.hpp"

#include <cmath>
#include <sstream>

#include "nmsp/errors.hpp"
#include "nmsp/key_value.hpp"
#include "nmsp/ops.hpp"

namespace nmsp {
namespace {

constexpr std::uint64_t kTrainStreamSalt = 0x5bd1e995ULL;

// Logits for every pair of the batch stacked row-wise, with targets and
// the rows to skip ([cls], [sep]).
Var stacked_loss(SpellerModel& model, Graph& g, std::span<const SentencePair> batch, bool training, Rng& rng,
                 bool* empty) {
  std::vector<Var> logits;
  std::vector<std::size_t> targets, ignore;
  std::size_t offset = 0;
  for (const auto& pair : batch) {
    pair.validate();
    const SequenceLayout layout = make_layout(pair.source);
    logits.push_back(model.forward(g, layout, training, rng));
    targets.push_back(special::cls);
    ignore.push_back(offset);
    for (std::size_t i = 0; i < pair.target.size(); ++i) {
      targets.push_back(pair.target[i]);
      if (is_special(pair.target[i])) ignore.push_back(offset + 1 + i);
    }
    targets.push_back(special::sep);
    ignore.push_back(offset + layout.total() - 1);
    offset += layout.total();
  }
  *empty = ignore.size() == targets.size();
  if (*empty) return {};
  return cross_entropy(concat_rows(logits), targets, ignore);
}

}  // namespace

Var batch_loss(SpellerModel& model, Graph& g, std::span<const SentencePair> batch, bool training, Rng& rng) {
  bool empty = false;
  Var loss = stacked_loss(model, g, batch, training, rng, &empty);
  if (empty) throw InputError("batch has no character positions");
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("lr must be non-negative");
  if (batch_size == 0) throw ConfigError("batch-size must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight-decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam-eps must be positive");
}

ModelConfig TrainConfig::model_config(std::size_t vocab_size, const ModalityResources& resources) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.max_length = max_length;
  m.width = width;
  m.heads = heads;
  m.ffn_width = ffn_width;
  m.semantic_depth = semantic_depth;
  m.fusion_depth = fusion_depth;
  m.modality_width = modality_width;
  m.phoneme_count = fusion ? resources.phoneme_symbols.size() : 0;
  m.component_count = fusion ? resources.component_count : 0;
  m.dropout = dropout;
  m.init_std = init_std;
  m.activation = activation;
  m.ngram = ngram;
  m.fusion = fusion;
  m.validate();
  return m;
}

std::string TrainConfig::serialize() const {
  std::ostringstream out;
  out << "ngram = " << to_string(ngram) << '\n'
      << "fusion = " << (fusion ? "on" : "off") << '\n'
      << "mask-at-inference = " << (mask_at_inference ? "on" : "off") << '\n'
      << "lr = " << format_double(learning_rate) << '\n'
      << "epochs = " << epochs << '\n'
      << "batch-size = " << batch_size << '\n'
      << "weight-decay = " << format_double(weight_decay) << '\n'
      << "beta1 = " << format_double(beta1) << '\n'
      << "beta2 = " << format_double(beta2) << '\n'
      << "adam-eps = " << format_double(adam_eps) << '\n'
      << "seed = " << seed << '\n'
      << "width = " << width << '\n'
      << "heads = " << heads << '\n'
      << "ffn-width = " << ffn_width << '\n'
      << "semantic-depth = " << semantic_depth << '\n'
      << "fusion-depth = " << fusion_depth << '\n'
      << "modality-width = " << modality_width << '\n'
      << "max-length = " << max_length << '\n'
      << "dropout = " << format_double(dropout) << '\n'
      << "init-std = " << format_double(init_std) << '\n'
      << "activation = " << to_string(activation) << '\n';
  return out.str();
}

AdamW::AdamW(const ParameterList& params, Options options) : params_(params), options_(options) {
  for (const auto& p : params_) {
    first_.emplace_back(p.tensor->size(), 0.0);
    second_.emplace_back(p.tensor->size(), 0.0);
  }
}

void AdamW::step() {
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k].tensor;
    const auto& grad = p.grad();
    auto& m = first_[k];
    auto& v = second_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = grad ? (*grad)[i] : 0.0;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.eps) + options_.weight_decay * p[i];
      p[i] -= options_.learning_rate * update;
    }
  }
}

TrainResult train(SpellerModel& model, const std::vector<SentencePair>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw InputError("training data is empty");
  ParameterList params = model.parameters();
  AdamW optimizer(params, {config.learning_rate, config.beta1, config.beta2, config.adam_eps, config.weight_decay});
  Rng rng(config.seed ^ kTrainStreamSalt);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<SentencePair> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(data[order[i]]);
      }
      zero_grads(params);
      Graph g;
      bool empty = false;
      Var loss = stacked_loss(model, g, batch, true, rng, &empty);
      if (empty) continue;
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(optimizer.steps()) + " (lr " + format_double(config.learning_rate) + ")");
      }
      g.backward(loss);
      optimizer.step();
      loss_sum += value;
      ++batches;
    }
    const double mean = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  zero_grads(params);
  result.steps = optimizer.steps();
  return result;
}

double batch_loss(SpellerModel& model, std::span<const SentencePair> batch) {
  Graph g(false);
  Rng rng(0);
  return batch_loss(model, g, batch, false, rng).value().item();
}

std::vector<TokenId> predict_sentence(SpellerModel& model, std::span<const TokenId> characters) {
  if (characters.size() + 2 > model.config().max_length) {
    throw InputError("sentence of " + std::to_string(characters.size()) + " characters exceeds max-length " +
                     std::to_string(model.config().max_length) + " (including [cls]/[sep])");
  }
  Graph g(false);
  Rng rng(0);
  const SequenceLayout layout = make_layout(characters);
  const Tensor& logits = model.forward(g, layout, false, rng).value();
  std::vector<TokenId> out(characters.size());
  for (std::size_t i = 0; i < characters.size(); ++i) {
    const auto row = logits.row(i + 1);
    TokenId best = special::count;
    for (TokenId v = special::count; v < row.size(); ++v)
      if (row[v] > row[best]) best = v;
    out[i] = best;
  }
  return out;
}

std::vector<std::vector<TokenId>> predict(SpellerModel& model, const std::vector<std::vector<TokenId>>& sentences) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(predict_sentence(model, s));
  return out;
}

std::vector<std::vector<TokenId>> predict_sources(SpellerModel& model, const std::vector<SentencePair>& pairs) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(predict_sentence(model, p.source));
  return out;
}

}  // namespace nmsp
