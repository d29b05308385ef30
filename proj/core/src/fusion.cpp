#include "nmsp/fusion.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "nmsp/errors.hpp"
#include "nmsp/ops.hpp"

namespace nmsp {
namespace {

void check_tokens(std::span<const TokenId> tokens, const ModalityResources& r) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= r.vocab_size()) {
      throw InputError("token id " + std::to_string(tokens[i]) + " at position " + std::to_string(i) +
                       " has no modality entry");
    }
  }
}

// Reads `char TAB fields` lines into (character, fields).
std::vector<std::pair<std::string, std::vector<std::string>>> read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError(path.string() + ":" + std::to_string(line_no) + ": missing TAB");
    std::string ch = line.substr(0, tab);
    if (utf8_chars(ch).size() != 1) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected one character, got '" + ch + "'");
    }
    std::istringstream fields(line.substr(tab + 1));
    std::vector<std::string> values;
    for (std::string f; fields >> f;) values.push_back(f);
    rows.emplace_back(std::move(ch), std::move(values));
  }
  return rows;
}

}  // namespace

void ModalityResources::validate(std::size_t vocab) const {
  if (pronunciation.size() != vocab || glyph.size() != vocab) {
    throw InputError("modality tables cover " + std::to_string(pronunciation.size()) + "/" +
                     std::to_string(glyph.size()) + " tokens, vocabulary has " + std::to_string(vocab));
  }
  for (const auto& seq : pronunciation)
    for (std::size_t s : seq)
      if (s >= phoneme_symbols.size()) throw InputError("phoneme id out of range");
  for (const auto& bag : glyph)
    for (std::size_t c : bag)
      if (c >= component_count) throw InputError("glyph component id out of range");
}

ModalityResources ModalityResources::load(const std::filesystem::path& pron_file, const std::filesystem::path& glyph_file,
                                          const Vocabulary& vocab) {
  ModalityResources r;
  r.pronunciation.assign(vocab.size(), {});
  r.glyph.assign(vocab.size(), {});
  std::vector<bool> seen_pron(vocab.size(), false), seen_glyph(vocab.size(), false);

  const auto pron_rows = read_table(pron_file);
  std::map<std::string, std::size_t> symbol_ids;
  for (const auto& [ch, symbols] : pron_rows)
    for (const auto& s : symbols) symbol_ids.emplace(s, 0);
  for (auto& [sym, id] : symbol_ids) {
    id = r.phoneme_symbols.size();
    r.phoneme_symbols.push_back(sym);
  }
  for (const auto& [ch, symbols] : pron_rows) {
    const auto id = vocab.find(ch);
    if (!id) throw InputError(pron_file.string() + ": character '" + ch + "' not in vocabulary");
    for (const auto& s : symbols) r.pronunciation[*id].push_back(symbol_ids.at(s));
    seen_pron[*id] = true;
  }

  for (const auto& [ch, comps] : read_table(glyph_file)) {
    const auto id = vocab.find(ch);
    if (!id) throw InputError(glyph_file.string() + ": character '" + ch + "' not in vocabulary");
    for (const auto& c : comps) {
      std::size_t value = 0;
      try {
        std::size_t used = 0;
        const long long parsed = std::stoll(c, &used);
        if (used != c.size() || parsed < 0) throw std::invalid_argument(c);
        value = static_cast<std::size_t>(parsed);
      } catch (const std::exception&) {
        throw InputError(glyph_file.string() + ": bad component id '" + c + "' for '" + ch + "'");
      }
      r.glyph[*id].push_back(value);
      r.component_count = std::max(r.component_count, value + 1);
    }
    seen_glyph[*id] = true;
  }

  for (TokenId id = special::count; id < vocab.size(); ++id) {
    if (!seen_pron[id]) throw InputError(pron_file.string() + ": no entry for '" + vocab.token(id) + "'");
    if (!seen_glyph[id]) throw InputError(glyph_file.string() + ": no entry for '" + vocab.token(id) + "'");
  }
  return r;
}

void ModalityResources::save(const std::filesystem::path& pron_file, const std::filesystem::path& glyph_file,
                             const Vocabulary& vocab) const {
  validate(vocab.size());
  std::ofstream pron(pron_file, std::ios::binary), gly(glyph_file, std::ios::binary);
  if (!pron) throw IoError("cannot write " + pron_file.string());
  if (!gly) throw IoError("cannot write " + glyph_file.string());
  for (TokenId id = special::count; id < vocab.size(); ++id) {
    pron << vocab.token(id) << '\t';
    for (std::size_t k = 0; k < pronunciation[id].size(); ++k) {
      pron << (k ? " " : "") << phoneme_symbols[pronunciation[id][k]];
    }
    pron << '\n';
    gly << vocab.token(id) << '\t';
    for (std::size_t k = 0; k < glyph[id].size(); ++k) gly << (k ? " " : "") << glyph[id][k];
    gly << '\n';
  }
  if (!pron || !gly) throw IoError("write failed for modality tables");
}

PhoneticEncoder PhoneticEncoder::create(std::size_t symbols, std::size_t hidden, std::size_t width, double init_std,
                                        Rng& rng) {
  PhoneticEncoder e;
  e.symbol_embedding = normal_parameter({symbols, hidden}, init_std, rng);
  e.input_weight = normal_parameter({hidden, hidden}, init_std, rng);
  e.state_weight = normal_parameter({hidden, hidden}, init_std, rng);
  e.bias = parameter({hidden});
  e.output_weight = normal_parameter({hidden, width}, init_std, rng);
  return e;
}

void PhoneticEncoder::collect(const std::string& prefix, ParameterList& out) {
  out.push_back({prefix + "symbol_embedding", &symbol_embedding});
  out.push_back({prefix + "input.weight", &input_weight});
  out.push_back({prefix + "state.weight", &state_weight});
  out.push_back({prefix + "bias", &bias});
  out.push_back({prefix + "output.weight", &output_weight});
}

GlyphEncoder GlyphEncoder::create(std::size_t components, std::size_t hidden, std::size_t width, double init_std,
                                  Rng& rng) {
  GlyphEncoder e;
  e.component_embedding = normal_parameter({components, hidden}, init_std, rng);
  e.output_weight = normal_parameter({hidden, width}, init_std, rng);
  return e;
}

void GlyphEncoder::collect(const std::string& prefix, ParameterList& out) {
  out.push_back({prefix + "component_embedding", &component_embedding});
  out.push_back({prefix + "output.weight", &output_weight});
}

Var encode_phonology(Graph& g, std::span<const TokenId> tokens, const ModalityResources& resources,
                     PhoneticEncoder& enc, double dropout_rate, bool training, Rng& rng) {
  check_tokens(tokens, resources);
  const std::size_t n = tokens.size();
  const std::size_t k = enc.input_weight.rows();
  std::size_t steps = 0;
  for (TokenId t : tokens) steps = std::max(steps, resources.pronunciation[t].size());

  // All positions advance in lockstep; rows whose sequence has ended keep
  // their state through a 0/1 blend.
  Var state = g.constant(Tensor({n, k}));
  for (std::size_t step = 0; step < steps; ++step) {
    std::vector<std::size_t> ids(n, 0);
    Tensor active({n, k}), inactive({n, k});
    bool all_active = true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& seq = resources.pronunciation[tokens[i]];
      const bool on = step < seq.size();
      if (on) ids[i] = seq[step];
      all_active = all_active && on;
      std::fill_n(active.row(i).begin(), k, on ? 1.0 : 0.0);
      std::fill_n(inactive.row(i).begin(), k, on ? 0.0 : 1.0);
    }
    Var input = gather_rows(g.param(enc.symbol_embedding), ids);
    Var update = tanh(add_row(add(matmul(input, g.param(enc.input_weight)), matmul(state, g.param(enc.state_weight))),
                              g.param(enc.bias)));
    state = all_active ? update
                       : add(mul(g.constant(std::move(active)), update), mul(g.constant(std::move(inactive)), state));
  }
  Var out = matmul(state, g.param(enc.output_weight));
  return dropout(out, dropout_rate, training, rng);
}

Var encode_glyph(Graph& g, std::span<const TokenId> tokens, const ModalityResources& resources, GlyphEncoder& enc,
                 double dropout_rate, bool training, Rng& rng) {
  check_tokens(tokens, resources);
  const std::size_t n = tokens.size();
  const std::size_t k = enc.component_embedding.cols();
  std::vector<std::size_t> flat;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c : resources.glyph[tokens[i]]) {
      flat.push_back(c);
      owner.push_back(i);
    }
  }
  Var bag;
  if (flat.empty()) {
    bag = g.constant(Tensor({n, k}));
  } else {
    // Row i of the selector sums the components owned by position i.
    Tensor selector({n, flat.size()});
    for (std::size_t j = 0; j < flat.size(); ++j) selector.at(owner[j], j) = 1.0;
    bag = matmul(g.constant(std::move(selector)), gather_rows(g.param(enc.component_embedding), flat));
  }
  Var out = matmul(bag, g.param(enc.output_weight));
  return dropout(out, dropout_rate, training, rng);
}

ModalityEncodings make_modality_encodings(Var semantic, Var phonetic, Var graphic, const std::vector<bool>& padding) {
  if (semantic.shape() != phonetic.shape() || semantic.shape() != graphic.shape()) {
    throw ShapeError("modality encodings disagree: " + shape_string(semantic.shape()) + ", " +
                     shape_string(phonetic.shape()) + ", " + shape_string(graphic.shape()));
  }
  std::vector<bool> include;
  if (!padding.empty()) {
    include.resize(padding.size());
    for (std::size_t i = 0; i < padding.size(); ++i) include[i] = !padding[i];
  }
  return {semantic, mean_rows(semantic, include), phonetic, graphic};
}

GateValues dot_product_gate(const ModalityEncodings& m) {
  if (m.semantic.shape() != m.phonetic.shape() || m.semantic.shape() != m.graphic.shape()) {
    throw ShapeError("dot_product_gate: modality shapes differ");
  }
  if (m.semantic_mean.cols() != m.semantic.cols()) throw ShapeError("dot_product_gate: mean width differs");
  const std::size_t n = m.semantic.rows();
  Var query = concat_cols({m.semantic, repeat_rows(m.semantic_mean, n)});
  GateValues gv;
  gv.scores_p = row_dot(query, concat_cols({m.phonetic, m.phonetic}));
  gv.scores_g = row_dot(query, concat_cols({m.graphic, m.graphic}));
  gv.gates_p = sigmoid(gv.scores_p);
  gv.gates_g = sigmoid(gv.scores_g);
  return gv;
}

Var fuse(const ModalityEncodings& m, const GateValues& gates) {
  return add(add(m.semantic, scale_rows(gates.gates_p, m.phonetic)), scale_rows(gates.gates_g, m.graphic));
}

}  // namespace nmsp
