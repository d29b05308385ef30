#include <gtest/gtest.h>

#include "nmsp/errors.hpp"
#include "nmsp/evaluate.hpp"
#include "oracles.hpp"

namespace nmsp {
namespace {

TEST(Evaluate, WorkedThreeSentenceExample) {
  // A: no error, unchanged. B: error at 2, corrected. C: error at 1, wrong fix.
  const std::vector<SentencePair> golds{
      {{5, 6, 7, 8}, {5, 6, 7, 8}},
      {{5, 6, 9, 8}, {5, 6, 7, 8}},
      {{5, 9, 7, 8}, {5, 6, 7, 8}},
  };
  const std::vector<std::vector<TokenId>> preds{{5, 6, 7, 8}, {5, 6, 7, 8}, {5, 10, 7, 8}};
  const EvalReport r = evaluate(preds, golds);
  EXPECT_EQ(r.detection.precision, 1.0);
  EXPECT_EQ(r.detection.recall, 1.0);
  EXPECT_EQ(r.detection.f1, 1.0);
  EXPECT_EQ(r.correction.precision, 0.5);
  EXPECT_EQ(r.correction.recall, 0.5);
  EXPECT_EQ(r.correction.f1, 0.5);
}

TEST(Evaluate, PerfectPredictions) {
  Rng rng(1);
  std::vector<SentencePair> golds;
  std::vector<std::vector<TokenId>> preds;
  for (int s = 0; s < 10; ++s) {
    SentencePair p{{5, 6, 7}, {5, 6, 7}};
    if (s < 4) p.source[s % 3] = 9;
    preds.push_back(p.target);
    golds.push_back(p);
  }
  const EvalReport r = evaluate(preds, golds);
  for (double v : {r.detection.precision, r.detection.recall, r.detection.f1, r.correction.precision,
                   r.correction.recall, r.correction.f1})
    EXPECT_EQ(v, 1.0);
}

TEST(Evaluate, FalseAlarmLowersPrecisionOnly) {
  std::vector<SentencePair> golds{{{5, 9}, {5, 6}}, {{5, 6}, {5, 6}}};
  std::vector<std::vector<TokenId>> good{{5, 6}, {5, 6}}, alarm{{5, 6}, {7, 6}};
  const EvalReport a = evaluate(good, golds), b = evaluate(alarm, golds);
  EXPECT_LT(b.detection.precision, a.detection.precision);
  EXPECT_EQ(b.detection.recall, a.detection.recall);
}

TEST(Evaluate, LengthMismatchRejected) {
  std::vector<SentencePair> golds{{{5, 9}, {5, 6}}};
  std::vector<std::vector<TokenId>> preds{{5}};
  EXPECT_THROW(evaluate(preds, golds), InputError);
  std::vector<std::vector<TokenId>> none;
  EXPECT_THROW(evaluate(none, golds), InputError);
}

TEST(Evaluate, MatchesBruteForceOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<SentencePair> golds;
    std::vector<std::vector<TokenId>> preds;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t len = 1 + rng.below(6);
      SentencePair p;
      std::vector<TokenId> pred;
      for (std::size_t i = 0; i < len; ++i) {
        const TokenId t = 5 + rng.below(4);
        p.target.push_back(t);
        p.source.push_back(rng.bernoulli(0.25) ? 5 + rng.below(4) : t);
        const double u = rng.uniform();
        pred.push_back(u < 0.5 ? p.source.back() : u < 0.8 ? t : 5 + rng.below(4));
      }
      golds.push_back(std::move(p));
      preds.push_back(std::move(pred));
    }
    std::set<TokenId> filter;
    if (trial % 2) filter.insert(5 + rng.below(4));

    const auto expect = testing::oracle_counts(preds, golds, filter);
    const EvalReport r = evaluate(preds, golds, filter);
    ASSERT_EQ(r.counts.flagged, expect.flagged) << trial;
    ASSERT_EQ(r.counts.gold_error_sentences, expect.gold) << trial;
    ASSERT_EQ(r.counts.detection_hits, expect.detection) << trial;
    ASSERT_EQ(r.counts.correction_hits, expect.correction) << trial;
    EXPECT_EQ(r.detection.f1, testing::oracle_f1(expect.detection, expect.flagged, expect.gold));
    EXPECT_EQ(r.correction.f1, testing::oracle_f1(expect.correction, expect.flagged, expect.gold));
    EXPECT_LE(r.correction.f1, r.detection.f1);
    for (double v : {r.detection.precision, r.detection.recall, r.correction.precision, r.correction.recall}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (filter.empty()) continue;
    // An empty filter is the identity; a non-empty one only ever drops changes.
    EXPECT_EQ(evaluate(preds, golds, {}).counts, evaluate(preds, golds).counts);
  }
}

TEST(Evaluate, FilterDropsChangesAtFilteredTargets) {
  // The only gold error targets character 7; filtering it leaves no error.
  std::vector<SentencePair> golds{{{5, 9}, {5, 7}}};
  std::vector<std::vector<TokenId>> preds{{5, 8}};
  const EvalReport r = evaluate(preds, golds, {7});
  EXPECT_EQ(r.counts.flagged, 0u);
  EXPECT_EQ(r.counts.gold_error_sentences, 0u);
}

TEST(Evaluate, MergeIsOrderIndependent) {
  std::vector<SentencePair> golds{{{5, 9}, {5, 6}}, {{5, 6}, {5, 6}}, {{9, 6}, {5, 6}}};
  std::vector<std::vector<TokenId>> preds{{5, 6}, {7, 6}, {8, 6}};
  const EvalReport all = evaluate(preds, golds);
  EvalReport a = evaluate(std::span(preds).first(1), std::span(golds).first(1));
  EvalReport b = evaluate(std::span(preds).subspan(1), std::span(golds).subspan(1));
  EvalReport ab = a, ba = b;
  ab.merge(b);
  ba.merge(a);
  EXPECT_EQ(ab.counts, all.counts);
  EXPECT_EQ(ba.counts, all.counts);
  EXPECT_EQ(ab.correction.f1, ba.correction.f1);
}

TEST(Evaluate, ReportFormatting) {
  std::vector<SentencePair> golds{{{5, 9}, {5, 6}}};
  std::vector<std::vector<TokenId>> preds{{5, 6}};
  const EvalReport r = evaluate(preds, golds);
  const std::string table = format_report_table(r);
  EXPECT_NE(table.find("Detection Level"), std::string::npos);
  EXPECT_NE(table.find("100.00"), std::string::npos);
  EXPECT_NE(format_report_values(r).find("correction_f1=1\n"), std::string::npos);
}

}  // namespace
}  // namespace nmsp
