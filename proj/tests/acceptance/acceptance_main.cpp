// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. `acceptance 3 7` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "nmsp/evaluate.hpp"
#include "nmsp/fusion.hpp"
#include "nmsp/model.hpp"
#include "nmsp/ngram_attention.hpp"
#include "nmsp/ops.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace nmsp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

const NGramMode kModes[] = {NGramMode::unigram, NGramMode::left_bigram, NGramMode::right_bigram, NGramMode::trigram};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct CliResult {
  int status;
  std::string out, err;
};

CliResult cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

void require_ok(const CliResult& r, const std::string& what) {
  if (r.status != 0) throw std::runtime_error(what + " exited " + std::to_string(r.status) + ": " + r.err);
}

double value_of(const std::string& text, const std::string& key) {
  const auto at = text.find("\n" + key + "=");
  if (at == std::string::npos) throw std::runtime_error("no " + key + " in output");
  return std::stod(text.substr(at + key.size() + 2));
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nmsp_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every attention weight at a hidden (row, key) of the n-gram layer stays
// below 1e-8 over random models, modes, lengths and padding.
Outcome mask_zeroing() {
  const auto t0 = Clock::now();
  Rng draw(101);
  double worst = 0.0;
  std::size_t checked = 0;
  const int draws = 100;
  for (int d = 0; d < draws; ++d) {
    ModelConfig c;
    c.vocab_size = 40;
    c.max_length = 32;
    c.width = 64;
    c.heads = 4;
    c.ffn_width = 64;
    c.semantic_depth = 1;
    c.fusion = false;
    c.dropout = 0.0;
    c.init_std = 0.02 + 0.5 * draw.uniform();
    c.ngram = kModes[draw.below(4)];
    SpellerModel model(c, draw.next());

    const std::size_t chars = draw.below(30) + 1;
    const std::size_t total = chars + 2 + draw.below(31 - chars);
    std::vector<TokenId> sentence;
    for (std::size_t i = 0; i < chars; ++i) sentence.push_back(static_cast<TokenId>(5 + draw.below(35)));
    const SequenceLayout layout = make_layout(sentence, total);

    Graph g(false);
    Rng rng(0);
    SpellerModel::Trace trace;
    model.forward(g, layout, false, rng, &trace);
    if (!trace.ngram_applied || trace.ngram_heads.size() != 4) return {false, "n-gram layer did not run"};
    const MaskIndices hidden = build_mask_indices(c.ngram, total, layout.padding);
    for (const auto& head : trace.ngram_heads)
      for (std::size_t i = 0; i < total; ++i) {
        std::set<std::size_t> keys(hidden[i].begin(), hidden[i].end());
        if (!layout.padding[i])
          for (std::size_t j = 0; j < total; ++j)
            if (layout.padding[j]) keys.insert(j);
        for (std::size_t j : keys) {
          worst = std::max(worst, head.weights.at(i, j));
          ++checked;
        }
      }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-8 && t < 30.0, std::to_string(draws) + " draws, " + std::to_string(checked) +
                                        " masked weights, max " + fmt("%.3g", worst) + ", " + fmt("%.1f", t) + " s"};
}

// Perturbing a hidden key row leaves that query row's head output unchanged.
Outcome head_invariance() {
  Rng rng(202);
  double worst = 0.0;
  std::size_t cases = 0;
  for (NGramMode mode : kModes)
    for (std::size_t chars = 0; chars <= 8; ++chars) {
      const std::size_t n = chars + 2;
      LayerConfig config;
      config.width = 16;
      config.heads = 4;
      config.ffn_width = 32;
      config.dropout = 0.0;
      TransformerLayerParams params = TransformerLayerParams::create(config, 0.5, rng);
      const Tensor e_out = testing::random_tensor({n, 16}, rng);
      const Tensor e_query = testing::random_tensor({n, 16}, rng);
      const auto mask = NGramAttentionMask::build(mode, n);
      const Tensor pad = padding_attention_mask(std::vector<bool>(n, false));
      auto heads_for = [&](const Tensor& e) {
        Graph g(false);
        Rng unused(0);
        std::vector<AttentionTrace> trace;
        ngram_masked_layer(g.constant(e), g.constant(e_query), params, config, mask, pad, false, unused, &trace);
        return trace;
      };
      const auto base = heads_for(e_out);
      for (std::size_t i = 0; i < n; ++i) {
        Tensor moved = e_out;
        for (std::size_t j : mask.indices[i])
          for (double& v : moved.row(j)) v += 10.0 * (rng.uniform() - 0.5);
        const auto after = heads_for(moved);
        for (std::size_t h = 0; h < base.size(); ++h)
          for (std::size_t c = 0; c < base[h].head.cols(); ++c)
            worst = std::max(worst, std::abs(after[h].head.at(i, c) - base[h].head.at(i, c)));
        ++cases;
      }
    }
  return {worst <= 1e-10, std::to_string(cases) + " rows across 4 modes, max change " + fmt("%.3g", worst)};
}

Outcome boundary_rules() {
  const auto golden = testing::read_golden_masks(NMSP_GOLDEN_DIR "/mask_boundaries.tsv");
  std::map<std::tuple<std::string, std::size_t, std::size_t>, std::vector<std::size_t>> table;
  for (const auto& row : golden) table[{row.mode, row.characters, row.row}] = row.masked;
  std::size_t rows = 0, bad = 0;
  for (NGramMode mode : kModes)
    for (std::size_t n = 2; n <= 10; ++n) {
      const MaskIndices built = build_mask_indices(mode, n);
      if (built.size() != n) return {false, "wrong row count"};
      for (std::size_t i = 0; i < n; ++i) {
        ++rows;
        const auto it = table.find({std::string(to_string(mode)), n - 2, i});
        if (it == table.end() || it->second != built[i] || built[i] != testing::oracle_mask_row(mode, n - 2, i)) ++bad;
      }
    }
  return {bad == 0, std::to_string(rows) + " rows checked, " + std::to_string(bad) + " mismatches"};
}

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  const auto r = cli_run({"grad-check", "--width", "8", "--vocab-size", "24", "--length", "6"});
  const double t = seconds_since(t0);
  const auto groups_at = r.out.find("\ngroups = ");
  const std::string groups = groups_at == std::string::npos ? "?" : r.out.substr(groups_at + 10, r.out.find('\n', groups_at + 1) - groups_at - 10);
  double worst = -1;
  if (const auto at = r.out.find("\nmax_rel_error = "); at != std::string::npos) worst = std::stod(r.out.substr(at + 17));
  return {r.status == 0 && worst >= 0 && worst < 1e-4 && t < 120.0,
          groups + " groups, max relative error " + fmt("%.3g", worst) + ", " + fmt("%.1f", t) + " s"};
}

Outcome metric_oracle() {
  const std::vector<SentencePair> worked{
      {{5, 6, 7, 8}, {5, 6, 7, 8}},
      {{5, 6, 9, 8}, {5, 6, 7, 8}},
      {{5, 9, 7, 8}, {5, 6, 7, 8}},
  };
  const std::vector<std::vector<TokenId>> worked_preds{{5, 6, 7, 8}, {5, 6, 7, 8}, {5, 10, 7, 8}};
  const EvalReport w = evaluate(worked_preds, worked);
  if (w.detection.f1 != 1.0 || w.correction.f1 != 0.5) return {false, "worked example differs"};

  Rng rng(505);
  std::size_t mismatches = 0, filtered = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SentencePair> golds;
    std::vector<std::vector<TokenId>> preds;
    const std::size_t n = 1 + rng.below(10);
    for (std::size_t s = 0; s < n; ++s) {
      SentencePair p;
      std::vector<TokenId> pred;
      const std::size_t len = 1 + rng.below(8);
      for (std::size_t i = 0; i < len; ++i) {
        const TokenId t = static_cast<TokenId>(5 + rng.below(5));
        p.target.push_back(t);
        p.source.push_back(rng.bernoulli(0.2) ? static_cast<TokenId>(5 + rng.below(5)) : t);
        const double u = rng.uniform();
        pred.push_back(u < 0.6 ? p.source.back() : u < 0.85 ? t : static_cast<TokenId>(5 + rng.below(5)));
      }
      golds.push_back(std::move(p));
      preds.push_back(std::move(pred));
    }
    std::set<TokenId> filter;
    if (trial % 2) {
      filter.insert(static_cast<TokenId>(5 + rng.below(5)));
      ++filtered;
    }
    const auto expect = testing::oracle_counts(preds, golds, filter);
    const EvalReport r = evaluate(preds, golds, filter);
    const bool same = r.counts.flagged == expect.flagged && r.counts.gold_error_sentences == expect.gold &&
                      r.counts.detection_hits == expect.detection && r.counts.correction_hits == expect.correction &&
                      r.detection.f1 == testing::oracle_f1(expect.detection, expect.flagged, expect.gold) &&
                      r.correction.f1 == testing::oracle_f1(expect.correction, expect.flagged, expect.gold);
    mismatches += !same;
  }
  return {mismatches == 0, "1000 sets (" + std::to_string(filtered) + " filtered), " + std::to_string(mismatches) +
                               " mismatches; worked example detection F1 1, correction F1 0.5"};
}

const std::vector<std::string> kToyModel = {"--width",          "32", "--heads",        "2",  "--ffn-width",
                                            "64",               "--semantic-depth", "2",  "--fusion-depth",
                                            "2",                "--modality-width", "16", "--max-length",
                                            "32",               "--lr",             "2e-3", "--batch-size",
                                            "16"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Outcome overfit() {
  const auto t0 = Clock::now();
  const fs::path dir = scratch("overfit");
  require_ok(cli_run({"gen-data", "--out", (dir / "data").string(), "--seed", "0", "--vocab-size", "50",
                      "--n-sentences", "200", "--error-rate", "0.15"}),
             "gen-data");
  require_ok(cli_run(with({"train", "--data", (dir / "data").string(), "--out", (dir / "m.ckpt").string(), "--ngram",
                           "trigram", "--fusion", "on", "--epochs", "100", "--dropout", "0", "--seed", "0"},
                          kToyModel)),
             "train");
  const auto r = cli_run({"eval", "--checkpoint", (dir / "m.ckpt").string(), "--data", (dir / "data").string(),
                          "--corpus", (dir / "data" / "train.tsv").string()});
  require_ok(r, "eval");
  const double f1 = value_of(r.out, "correction_f1");
  const double t = seconds_since(t0);
  return {f1 >= 0.95 && t < 600.0, "train correction F1 " + fmt("%.4f", f1) + " after 100 epochs, " + fmt("%.0f", t) + " s"};
}

Outcome ablation() {
  const fs::path dir = scratch("ablation");
  int wins = 0;
  std::string detail;
  for (int seed = 0; seed < 5; ++seed) {
    const std::string s = std::to_string(seed);
    const fs::path data = dir / ("data" + s);
    require_ok(cli_run({"gen-data", "--out", data.string(), "--seed", s, "--n-test", "200", "--adjacent-error-rate",
                        "0.5"}),
               "gen-data");
    double f1[2];
    const char* modes[2] = {"trigram", "none"};
    for (int k = 0; k < 2; ++k) {
      const fs::path ckpt = dir / (std::string(modes[k]) + s + ".ckpt");
      require_ok(cli_run(with({"train", "--data", data.string(), "--out", ckpt.string(), "--ngram", modes[k],
                               "--fusion", "on", "--epochs", "40", "--seed", s},
                              kToyModel)),
                 "train");
      const auto r = cli_run({"eval", "--checkpoint", ckpt.string(), "--data", data.string()});
      require_ok(r, "eval");
      f1[k] = value_of(r.out, "correction_f1");
    }
    wins += f1[0] >= f1[1];
    detail += (seed ? ", " : "") + fmt("%.3f", f1[0]) + "/" + fmt("%.3f", f1[1]);
  }
  return {wins >= 3, "trigram >= none in " + std::to_string(wins) + "/5 seeds (" + detail + ")"};
}

Outcome gate_properties() {
  Rng rng(808);
  double min_gate = 1.0, max_gate = 0.0, fusion_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(10), d = 1 + rng.below(16);
    const double scale = trial < 25 ? 1.0 : 1e3;  // large scores saturate the sigmoid
    Graph g(false);
    const ModalityEncodings m = make_modality_encodings(g.constant(testing::random_tensor({n, d}, rng, scale)),
                                                        g.constant(testing::random_tensor({n, d}, rng, scale)),
                                                        g.constant(testing::random_tensor({n, d}, rng, scale)));
    const GateValues gv = dot_product_gate(m);
    for (const Var& gate : {gv.gates_p, gv.gates_g})
      for (double v : gate.value().values()) {
        min_gate = std::min(min_gate, v);
        max_gate = std::max(max_gate, v);
      }

    const Var hs = g.constant(testing::random_tensor({n, d}, rng));
    const ModalityEncodings zero = make_modality_encodings(hs, g.constant(Tensor({n, d})), g.constant(Tensor({n, d})));
    const Tensor fused = fuse(zero, dot_product_gate(zero)).value();
    for (std::size_t i = 0; i < fused.size(); ++i) fusion_gap = std::max(fusion_gap, std::abs(fused[i] - hs.value()[i]));
  }

  // One row: H_s = mean = [1, 0], so both scores come out at 2.
  Graph g(false);
  const ModalityEncodings hand = make_modality_encodings(g.constant(Tensor::matrix({{1.0, 0.0}})),
                                                         g.constant(Tensor::matrix({{1.0, 0.0}})),
                                                         g.constant(Tensor::matrix({{1.0, 3.0}})));
  const GateValues hg = dot_product_gate(hand);
  const double expected = 1.0 / (1.0 + std::exp(-2.0));
  const double sp = hg.gates_p.value()[0], sg = hg.gates_g.value()[0];
  const bool hand_ok = std::abs(expected - 0.880797) < 5e-7 && std::abs(sp - 0.880797) < 5e-7 &&
                       std::abs(sg - 0.880797) < 5e-7 && hg.scores_p.value()[0] == 2.0;
  return {min_gate > 0.0 && max_gate < 1.0 && fusion_gap <= 1e-12 && hand_ok,
          "gates in [" + fmt("%.3g", min_gate) + ", 1 - " + fmt("%.3g", 1.0 - max_gate) + "], zero-modality gap " +
              fmt("%.3g", fusion_gap) + ", sigma(2) = " + fmt("%.6f", sp)};
}

// A mode-none model and a masked model with the same remaining parameters
// (and its layer switched off at inference) must give the same bits; the
// none model itself owns no n-gram parameters.
Outcome bypass_equivalence() {
  Rng rng(909);
  std::size_t compared = 0, differing = 0;
  bool no_layer = true;
  for (int trial = 0; trial < 10; ++trial) {
    ModelConfig c;
    c.vocab_size = 30;
    c.max_length = 20;
    c.width = 16;
    c.heads = 2;
    c.ffn_width = 32;
    c.semantic_depth = 2;
    c.fusion = false;
    c.init_std = 0.2;
    c.ngram = NGramMode::none;
    SpellerModel bypass(c, rng.next());
    c.ngram = NGramMode::trigram;
    SpellerModel plain(c, rng.next());
    plain.set_inference_masking(false);
    no_layer = no_layer && !bypass.has_ngram_layer();

    // Copy every shared parameter into the layer-free model after jittering it.
    std::map<std::string, Tensor*> src;
    for (auto& p : plain.parameters()) {
      for (double& v : p.tensor->values()) v += 0.1 * (rng.uniform() - 0.5);
      src[p.name] = p.tensor;
    }
    for (auto& p : bypass.parameters()) {
      if (p.name.rfind("ngram.", 0) == 0) no_layer = false;
      *p.tensor = *src.at(p.name);
    }

    std::vector<TokenId> sentence;
    for (std::size_t i = 0, n = 1 + rng.below(16); i < n; ++i) sentence.push_back(static_cast<TokenId>(5 + rng.below(25)));
    const SequenceLayout layout = make_layout(sentence, 18);
    Graph ga(false), gb(false);
    Rng ra(0), rb(0);
    const Tensor a = bypass.forward(ga, layout, false, ra).value();
    const Tensor b = plain.forward(gb, layout, false, rb).value();
    for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] != b[i];
    compared += a.size();
  }
  return {no_layer && differing == 0,
          std::to_string(compared) + " logits compared, " + std::to_string(differing) + " differ"};
}

Outcome determinism() {
  const fs::path dir = scratch("determinism");
  require_ok(cli_run({"gen-data", "--out", (dir / "data").string(), "--seed", "3", "--n-sentences", "40"}), "gen-data");
  for (const char* name : {"a.ckpt", "b.ckpt"})
    require_ok(cli_run(with({"train", "--data", (dir / "data").string(), "--out", (dir / name).string(), "--epochs",
                             "3", "--seed", "11"},
                            kToyModel)),
               "train");
  const std::string a = read_file(dir / "a.ckpt"), b = read_file(dir / "b.ckpt");
  return {!a.empty() && a == b, std::to_string(a.size()) + " byte checkpoints " + (a == b ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mask zeroing", mask_zeroing},
      {"head-level invariance", head_invariance},
      {"boundary rules", boundary_rules},
      {"gradient integrity", gradient_integrity},
      {"metric oracle", metric_oracle},
      {"overfit sanity", overfit},
      {"directional ablation", ablation},
      {"gate properties", gate_properties},
      {"bypass equivalence", bypass_equivalence},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[k].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
