#include <gtest/gtest.h>

#include <cmath>

#include "nmsp/errors.hpp"
#include "nmsp/fusion.hpp"
#include "nmsp/grad_check.hpp"
#include "nmsp/ops.hpp"
#include "nmsp/parameters.hpp"
#include "oracles.hpp"

namespace nmsp {
namespace {

using testing::random_tensor;

double oracle_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

GateValues gates_for(Graph& g, const Tensor& hs, const Tensor& hp, const Tensor& hg, const std::vector<bool>& padding = {}) {
  const auto m = make_modality_encodings(g.constant(hs), g.constant(hp), g.constant(hg), padding);
  return dot_product_gate(m);
}

TEST(Gate, ZeroSemanticGivesHalf) {
  Rng rng(1);
  Graph g(false);
  const auto gates = gates_for(g, Tensor({3, 4}), random_tensor({3, 4}, rng), random_tensor({3, 4}, rng));
  for (double v : gates.gates_p.value().values()) EXPECT_EQ(v, 0.5);
  for (double v : gates.gates_g.value().values()) EXPECT_EQ(v, 0.5);
}

TEST(Gate, HandCaseSigmoidOfTwo) {
  Graph g(false);
  const auto gates = gates_for(g, Tensor::matrix({{1, 0}}), Tensor::matrix({{1, 1}}), Tensor::matrix({{0, 0}}));
  EXPECT_DOUBLE_EQ(gates.scores_p.value().item(), 2.0);
  EXPECT_NEAR(gates.gates_p.value().item(), 0.880797, 5e-7);
  EXPECT_NEAR(gates.gates_p.value().item(), oracle_sigmoid(2.0), 1e-15);
}

TEST(Gate, ScoresMatchOracleAndScaleLinearly) {
  Rng rng(2);
  const Tensor hs = random_tensor({4, 3}, rng), hp = random_tensor({4, 3}, rng), hg = random_tensor({4, 3}, rng);
  Graph g(false);
  const auto base = gates_for(g, hs, hp, hg);
  for (std::size_t i = 0; i < 4; ++i) {
    double sp = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double mean = (hs.at(0, k) + hs.at(1, k) + hs.at(2, k) + hs.at(3, k)) / 4;
      sp += hs.at(i, k) * hp.at(i, k) + mean * hp.at(i, k);
    }
    EXPECT_NEAR(base.scores_p.value()[i], sp, 1e-14);
  }
  Tensor hp3 = hp;
  for (double& v : hp3.values()) v *= 3.0;
  const auto scaled = gates_for(g, hs, hp3, hg);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(scaled.scores_p.value()[i], 3.0 * base.scores_p.value()[i], 1e-13);
}

TEST(Gate, StrictlyInsideUnitInterval) {
  Rng rng(3);
  Graph g(false);
  const auto gates = gates_for(g, random_tensor({6, 4}, rng, 100.0), random_tensor({6, 4}, rng, 100.0),
                               random_tensor({6, 4}, rng, 100.0));
  for (const Var& v : {gates.gates_p, gates.gates_g})
    for (double x : v.value().values()) {
      EXPECT_GT(x, 0.0);
      EXPECT_LT(x, 1.0);
    }
}

TEST(Gate, PaddingDoesNotMoveRealGates) {
  Rng rng(4);
  const Tensor hs = random_tensor({3, 4}, rng), hp = random_tensor({3, 4}, rng), hg = random_tensor({3, 4}, rng);
  Tensor hs_pad({5, 4}), hp_pad({5, 4}), hg_pad({5, 4});
  for (std::size_t i = 0; i < 5 * 4; ++i) {
    hs_pad[i] = i < 12 ? hs[i] : 7.0;
    hp_pad[i] = i < 12 ? hp[i] : -3.0;
    hg_pad[i] = i < 12 ? hg[i] : 2.0;
  }
  Graph g(false);
  const auto a = gates_for(g, hs, hp, hg);
  const auto b = gates_for(g, hs_pad, hp_pad, hg_pad, {false, false, false, true, true});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(a.gates_p.value()[i], b.gates_p.value()[i], 1e-12);
    EXPECT_NEAR(a.gates_g.value()[i], b.gates_g.value()[i], 1e-12);
  }
}

TEST(Fuse, ZeroModalitiesReturnSemantic) {
  Rng rng(5);
  const Tensor hs = random_tensor({3, 4}, rng);
  Graph g(false);
  const auto m = make_modality_encodings(g.constant(hs), g.constant(Tensor({3, 4})), g.constant(Tensor({3, 4})));
  const Tensor f = fuse(m, dot_product_gate(m)).value();
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], hs[i], 1e-12);
}

TEST(Fuse, HalfGatesAverageModalities) {
  Rng rng(6);
  const Tensor hp = random_tensor({2, 3}, rng), hg = random_tensor({2, 3}, rng);
  Graph g(false);
  const auto m = make_modality_encodings(g.constant(Tensor({2, 3})), g.constant(hp), g.constant(hg));
  const Tensor f = fuse(m, dot_product_gate(m)).value();
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], 0.5 * (hp[i] + hg[i]), 1e-15);
}

TEST(Fuse, RandomCaseMatchesScalarOracle) {
  Rng rng(7);
  const Tensor hs = random_tensor({2, 3}, rng), hp = random_tensor({2, 3}, rng), hg = random_tensor({2, 3}, rng);
  Graph g(false);
  const auto m = make_modality_encodings(g.constant(hs), g.constant(hp), g.constant(hg));
  const Tensor f = fuse(m, dot_product_gate(m)).value();
  for (std::size_t i = 0; i < 2; ++i) {
    double sp = 0, sg = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double mean = (hs.at(0, k) + hs.at(1, k)) / 2;
      sp += (hs.at(i, k) + mean) * hp.at(i, k);
      sg += (hs.at(i, k) + mean) * hg.at(i, k);
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double expected = hs.at(i, k) + oracle_sigmoid(sp) * hp.at(i, k) + oracle_sigmoid(sg) * hg.at(i, k);
      EXPECT_NEAR(f.at(i, k), expected, 1e-14);
    }
  }
}

TEST(Fuse, GradientsReachAllModalities) {
  Rng rng(8);
  Tensor hs = random_tensor({3, 4}, rng), hp = random_tensor({3, 4}, rng), hg = random_tensor({3, 4}, rng);
  for (Tensor* t : {&hs, &hp, &hg}) t->set_requires_grad(true);
  const Tensor w = random_tensor({3, 4}, rng);
  std::vector<Tensor*> params{&hs, &hp, &hg};
  const auto report = finite_difference_check(
      [&](Graph& g) {
        const auto m = make_modality_encodings(g.param(hs), g.param(hp), g.param(hg), {false, false, true});
        return sum(mul(fuse(m, dot_product_gate(m)), g.constant(w)));
      },
      params);
  for (const auto& e : report) EXPECT_LT(e.max_relative_error, 1e-4);
  for (Tensor* t : params) EXPECT_FALSE(t->grad().has_value());
}

ModalityResources small_resources() {
  ModalityResources r;
  r.pronunciation.assign(9, {});
  r.glyph.assign(9, {});
  r.phoneme_symbols = {"a", "b", "1", "2"};
  r.component_count = 4;
  r.pronunciation[5] = {0};
  r.pronunciation[6] = {0, 1, 2};
  r.pronunciation[7] = {0, 1, 2};
  r.pronunciation[8] = {1, 3};
  r.glyph[5] = {0};
  r.glyph[6] = {1};
  r.glyph[7] = {0, 1};
  r.glyph[8] = {0, 1};
  return r;
}

TEST(Phonetic, OneStepRecurrenceOracle) {
  const ModalityResources res = small_resources();
  Rng rng(9);
  PhoneticEncoder enc = PhoneticEncoder::create(4, 3, 5, 0.5, rng);
  Graph g(false);
  const std::vector<TokenId> tokens{1, 5, 6, 7};
  const Tensor y = encode_phonology(g, tokens, res, enc, 0.0, false, rng).value();
  for (double v : y.row(0)) EXPECT_EQ(v, 0.0);
  std::vector<double> h(3);
  for (std::size_t j = 0; j < 3; ++j) {
    double z = enc.bias[j];
    for (std::size_t k = 0; k < 3; ++k) z += enc.symbol_embedding.at(0, k) * enc.input_weight.at(k, j);
    h[j] = std::tanh(z);
  }
  for (std::size_t c = 0; c < 5; ++c) {
    double o = 0;
    for (std::size_t j = 0; j < 3; ++j) o += h[j] * enc.output_weight.at(j, c);
    EXPECT_NEAR(y.at(1, c), o, 1e-14);
  }
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(y.at(2, c), y.at(3, c));
}

TEST(Glyph, LinearInComponents) {
  const ModalityResources res = small_resources();
  Rng rng(10);
  GlyphEncoder enc = GlyphEncoder::create(4, 3, 5, 0.5, rng);
  Graph g(false);
  const std::vector<TokenId> tokens{2, 5, 6, 7, 8};
  const Tensor y = encode_glyph(g, tokens, res, enc, 0.0, false, rng).value();
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_EQ(y.at(0, c), 0.0);
    EXPECT_NEAR(y.at(3, c), y.at(1, c) + y.at(2, c), 1e-14);
    EXPECT_EQ(y.at(3, c), y.at(4, c));
  }
}

TEST(Resources, Validate) {
  ModalityResources res = small_resources();
  EXPECT_NO_THROW(res.validate(9));
  EXPECT_THROW(res.validate(10), InputError);
  res.glyph[6] = {9};
  EXPECT_THROW(res.validate(9), InputError);
}

}  // namespace
}  // namespace nmsp
