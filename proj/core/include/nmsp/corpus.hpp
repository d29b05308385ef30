#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <vector>

#include "nmsp/fusion.hpp"
#include "nmsp/rng.hpp"
#include "nmsp/vocab.hpp"

namespace nmsp {

// Aligned source (possibly misspelled) and target character IDs.
struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;

  void validate() const;  // equal lengths
  std::vector<std::size_t> correct_positions() const;
  std::vector<std::size_t> incorrect_positions() const;
};

// Character -> similar characters. Candidates are non-empty, differ from the
// key, and lie inside the vocabulary.
class ConfusionSet {
 public:
  ConfusionSet() = default;
  explicit ConfusionSet(std::map<TokenId, std::vector<TokenId>> entries) : entries_(std::move(entries)) {}

  void validate(std::size_t vocab_size) const;
  bool empty() const { return entries_.empty(); }
  const std::vector<TokenId>* candidates(TokenId ch) const;
  const std::map<TokenId, std::vector<TokenId>>& entries() const { return entries_; }

  // `char TAB candidates` with candidates concatenated.
  static ConfusionSet load(const std::filesystem::path& path, const Vocabulary& vocab);
  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;

 private:
  std::map<TokenId, std::vector<TokenId>> entries_;
};

struct CorpusOptions {
  std::size_t n_sentences = 200;
  std::size_t min_length = 8;
  std::size_t max_length = 16;
  double error_rate = 0.15;
  double adjacent_error_rate = 0.0;
};

// Seeded toy language with confusable clusters. Characters in one cluster
// share a syllable (differing in tone) and a radical component, and confuse
// with each other. Sentences follow a sparse first-order character chain.
struct SyntheticWorld {
  Vocabulary vocab;
  ConfusionSet confusion;
  ModalityResources resources;
  std::vector<std::vector<TokenId>> successors;           // per token ID, candidate next characters
  std::vector<std::vector<double>> successor_weights;     // matching cumulative weights

  static SyntheticWorld create(std::size_t vocab_size, Rng& rng, std::size_t cluster_size = 3,
                               std::size_t branching = 3);

  std::vector<TokenId> sample_sentence(std::size_t length, Rng& rng) const;
};

// Samples clean targets from the world's chain, then corrupts each position
// with probability error_rate by a uniform confusion candidate; a corruption
// also corrupts one neighbour with probability adjacent_error_rate.
std::vector<SentencePair> generate_corpus(const SyntheticWorld& world, const CorpusOptions& options, Rng& rng);

// Corruption step alone, for an existing clean sentence.
SentencePair corrupt(std::vector<TokenId> target, const ConfusionSet& confusion, double error_rate,
                     double adjacent_error_rate, Rng& rng);

// `source TAB target` per line, equal character counts.
std::vector<SentencePair> load_corpus(const std::filesystem::path& path, const Vocabulary& vocab);
void save_corpus(const std::filesystem::path& path, const std::vector<SentencePair>& pairs, const Vocabulary& vocab);

}  // namespace nmsp
