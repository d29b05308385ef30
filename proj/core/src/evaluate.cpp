#include "nmsp/evaluate.hpp"

#include <cstdio>
#include <sstream>

#include "nmsp/errors.hpp"
#include "nmsp/key_value.hpp"

namespace nmsp {

EvalCounts& EvalCounts::operator+=(const EvalCounts& o) {
  sentences += o.sentences;
  flagged += o.flagged;
  gold_error_sentences += o.gold_error_sentences;
  detection_hits += o.detection_hits;
  correction_hits += o.correction_hits;
  return *this;
}

PrecisionRecall PrecisionRecall::from_counts(std::size_t hits, std::size_t predicted, std::size_t gold) {
  PrecisionRecall m;
  m.precision = predicted ? static_cast<double>(hits) / static_cast<double>(predicted) : 0.0;
  m.recall = gold ? static_cast<double>(hits) / static_cast<double>(gold) : 0.0;
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

EvalReport EvalReport::from_verdicts(std::vector<SentenceVerdict> verdicts) {
  EvalReport r;
  for (const auto& v : verdicts) {
    r.counts.sentences += 1;
    r.counts.flagged += v.flagged;
    r.counts.gold_error_sentences += v.has_gold_error;
    r.counts.detection_hits += v.detection_hit;
    r.counts.correction_hits += v.correction_hit;
  }
  r.detection = PrecisionRecall::from_counts(r.counts.detection_hits, r.counts.flagged, r.counts.gold_error_sentences);
  r.correction = PrecisionRecall::from_counts(r.counts.correction_hits, r.counts.flagged, r.counts.gold_error_sentences);
  r.verdicts = std::move(verdicts);
  return r;
}

EvalReport& EvalReport::merge(const EvalReport& other) {
  std::vector<SentenceVerdict> all = verdicts;
  all.insert(all.end(), other.verdicts.begin(), other.verdicts.end());
  *this = from_verdicts(std::move(all));
  return *this;
}

SentenceVerdict judge_sentence(std::span<const TokenId> prediction, const SentencePair& gold,
                               const std::set<TokenId>& filter_chars) {
  gold.validate();
  if (prediction.size() != gold.source.size()) {
    throw InputError("prediction has " + std::to_string(prediction.size()) + " characters, gold " +
                     std::to_string(gold.source.size()));
  }
  SentenceVerdict v;
  bool positions_match = true;
  bool characters_match = true;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    if (filter_chars.contains(gold.target[i])) continue;
    const bool gold_change = gold.source[i] != gold.target[i];
    const bool predicted_change = prediction[i] != gold.source[i];
    v.has_gold_error |= gold_change;
    v.flagged |= predicted_change;
    if (gold_change != predicted_change) positions_match = false;
    if (gold_change && prediction[i] != gold.target[i]) characters_match = false;
  }
  v.detection_hit = v.flagged && positions_match;
  v.correction_hit = v.detection_hit && characters_match;
  return v;
}

EvalReport evaluate(std::span<const std::vector<TokenId>> predictions, std::span<const SentencePair> golds,
                    const std::set<TokenId>& filter_chars) {
  if (predictions.size() != golds.size()) {
    throw InputError(std::to_string(predictions.size()) + " predictions for " + std::to_string(golds.size()) +
                     " gold sentences");
  }
  std::vector<SentenceVerdict> verdicts;
  verdicts.reserve(golds.size());
  for (std::size_t s = 0; s < golds.size(); ++s) {
    verdicts.push_back(judge_sentence(predictions[s], golds[s], filter_chars));
  }
  return EvalReport::from_verdicts(std::move(verdicts));
}

std::string format_report_table(const EvalReport& r) {
  char buf[256];
  std::ostringstream out;
  out << "+-----------------------+-----------------------+\n"
      << "|    Detection Level    |   Correction Level    |\n"
      << "|  Pre     Rec     F1   |  Pre     Rec     F1   |\n"
      << "+-----------------------+-----------------------+\n";
  std::snprintf(buf, sizeof buf, "|%6.2f  %6.2f  %6.2f |%6.2f  %6.2f  %6.2f |\n", 100 * r.detection.precision,
                100 * r.detection.recall, 100 * r.detection.f1, 100 * r.correction.precision, 100 * r.correction.recall,
                100 * r.correction.f1);
  out << buf << "+-----------------------+-----------------------+\n";
  return out.str();
}

std::string format_report_values(const EvalReport& r) {
  std::ostringstream out;
  out << "sentences=" << r.counts.sentences << '\n'
      << "flagged=" << r.counts.flagged << '\n'
      << "gold_error_sentences=" << r.counts.gold_error_sentences << '\n'
      << "detection_hits=" << r.counts.detection_hits << '\n'
      << "correction_hits=" << r.counts.correction_hits << '\n'
      << "detection_precision=" << format_double(r.detection.precision) << '\n'
      << "detection_recall=" << format_double(r.detection.recall) << '\n'
      << "detection_f1=" << format_double(r.detection.f1) << '\n'
      << "correction_precision=" << format_double(r.correction.precision) << '\n'
      << "correction_recall=" << format_double(r.correction.recall) << '\n'
      << "correction_f1=" << format_double(r.correction.f1) << '\n';
  return out.str();
}

}  // namespace nmsp
