#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nmsp/corpus.hpp"

namespace nmsp {

struct SentenceVerdict {
  bool has_gold_error = false;  // any gold change survives filtering
  bool flagged = false;         // prediction changes the source somewhere
  bool detection_hit = false;   // changed positions == gold error positions
  bool correction_hit = false;  // ... and the changed characters equal gold
};

struct EvalCounts {
  std::size_t sentences = 0;
  std::size_t flagged = 0;
  std::size_t gold_error_sentences = 0;
  std::size_t detection_hits = 0;
  std::size_t correction_hits = 0;

  EvalCounts& operator+=(const EvalCounts& other);
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // P = hits/predicted, R = hits/gold; each 0 when its denominator is 0;
  // F1 is their harmonic mean, 0 when P + R = 0.
  static PrecisionRecall from_counts(std::size_t hits, std::size_t predicted, std::size_t gold);
};

struct EvalReport {
  EvalCounts counts;
  PrecisionRecall detection;
  PrecisionRecall correction;
  std::vector<SentenceVerdict> verdicts;

  static EvalReport from_verdicts(std::vector<SentenceVerdict> verdicts);
  // Concatenates verdicts and recomputes metrics; order of merging does not
  // change the metrics.
  EvalReport& merge(const EvalReport& other);
};

SentenceVerdict judge_sentence(std::span<const TokenId> prediction, const SentencePair& gold,
                               const std::set<TokenId>& filter_chars = {});

// Sentence-level detection/correction scoring. Changes (gold or predicted)
// at positions whose gold character is in `filter_chars` are dropped first.
EvalReport evaluate(std::span<const std::vector<TokenId>> predictions, std::span<const SentencePair> golds,
                    const std::set<TokenId>& filter_chars = {});

// Two-row table in the usual Pre/Rec/F1 layout, percentages.
std::string format_report_table(const EvalReport& report);
// `key=value` lines, raw fractions.
std::string format_report_values(const EvalReport& report);

}  // namespace nmsp
