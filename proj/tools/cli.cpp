#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "nmsp/checkpoint.hpp"
#include "nmsp/corpus.hpp"
#include "nmsp/errors.hpp"
#include "nmsp/evaluate.hpp"
#include "nmsp/grad_check.hpp"
#include "nmsp/key_value.hpp"
#include "nmsp/ngram_attention.hpp"
#include "nmsp/trainer.hpp"
#include "run_config.hpp"

namespace nmsp::cli {
namespace {

namespace fs = std::filesystem;

std::vector<RunConfig::Option> model_options() {
  return {
      {"ngram", "trigram", "n-gram mask: none, unigram, left_bigram, right_bigram, trigram"},
      {"fusion", "on", "dot-product gated multi-modal fusion (on/off)"},
      {"mask-at-inference", "on", "run the n-gram layer at prediction time (on/off)"},
      {"width", "64", "hidden size"},
      {"heads", "4", "attention heads"},
      {"ffn-width", "256", "feed-forward inner size"},
      {"semantic-depth", "2", "layers in the semantic encoder"},
      {"fusion-depth", "3", "layers in the fusion encoder"},
      {"modality-width", "32", "hidden size of the phonetic/glyph encoders"},
      {"max-length", "128", "maximum positions including [cls]/[sep]"},
      {"dropout", "0.1", "dropout rate"},
      {"init-std", "0.02", "stddev of normal weight initialisation"},
      {"activation", "gelu", "feed-forward activation: gelu or relu"},
  };
}

TrainConfig train_config_from(const RunConfig& rc) {
  TrainConfig c;
  c.ngram = parse_ngram_mode(rc.get("ngram"));
  c.fusion = rc.get_bool("fusion");
  c.mask_at_inference = rc.get_bool("mask-at-inference");
  c.learning_rate = rc.get_double("lr");
  c.epochs = rc.get_size("epochs");
  c.batch_size = rc.get_size("batch-size");
  c.weight_decay = rc.get_double("weight-decay");
  c.seed = rc.get_u64("seed");
  c.width = rc.get_size("width");
  c.heads = rc.get_size("heads");
  c.ffn_width = rc.get_size("ffn-width");
  c.semantic_depth = rc.get_size("semantic-depth");
  c.fusion_depth = rc.get_size("fusion-depth");
  c.modality_width = rc.get_size("modality-width");
  c.max_length = rc.get_size("max-length");
  c.dropout = rc.get_double("dropout");
  c.init_std = rc.get_double("init-std");
  c.activation = parse_activation(rc.get("activation"));
  c.validate();
  return c;
}

struct DataBundle {
  Vocabulary vocab;
  ModalityResources resources;
};

DataBundle load_data_dir(const fs::path& dir) {
  DataBundle b;
  b.vocab = Vocabulary::load(dir / "vocab.txt");
  b.resources = ModalityResources::load(dir / "pronunciation.tsv", dir / "glyph.tsv", b.vocab);
  return b;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

fs::path require_path(const RunConfig& rc, const std::string& key) {
  if (!rc.has_value(key)) throw ConfigError("--" + key + " is required for " + rc.command());
  return rc.get(key);
}

// Loads a checkpoint and attaches data-dir resources, checking that both
// describe the same vocabulary and modality tables.
SpellerModel open_model(const RunConfig& rc, const DataBundle& data, std::string* run_config) {
  SpellerModel model = load_checkpoint(require_path(rc, "checkpoint"), run_config);
  if (model.config().vocab_size != data.vocab.size()) {
    throw ConfigError("checkpoint expects a vocabulary of " + std::to_string(model.config().vocab_size) +
                      " tokens, data directory has " + std::to_string(data.vocab.size()));
  }
  if (model.config().fusion) model.set_resources(data.resources);

  bool masking = true;
  if (rc.has_value("mask-at-inference")) {
    masking = rc.get_bool("mask-at-inference");
  } else if (run_config) {
    for (const auto& [k, v] : parse_key_values(*run_config, "checkpoint run config"))
      if (k == "mask-at-inference") masking = parse_bool(v, k);
  }
  model.set_inference_masking(masking);
  return model;
}

int cmd_gen_data(const RunConfig& rc, std::ostream& out) {
  const fs::path dir = require_path(rc, "out");
  const std::uint64_t seed = rc.get_u64("seed");
  CorpusOptions train_opts;
  train_opts.n_sentences = rc.get_size("n-sentences");
  train_opts.min_length = rc.get_size("min-length");
  train_opts.max_length = rc.get_size("max-length");
  train_opts.error_rate = rc.get_double("error-rate");
  train_opts.adjacent_error_rate = rc.get_double("adjacent-error-rate");
  CorpusOptions test_opts = train_opts;
  test_opts.n_sentences = rc.get_size("n-test");

  Rng rng(seed);
  const SyntheticWorld world =
      SyntheticWorld::create(rc.get_size("vocab-size"), rng, rc.get_size("cluster-size"), rc.get_size("branching"));
  Rng train_rng = rng.split();
  Rng test_rng = rng.split();
  const auto train = generate_corpus(world, train_opts, train_rng);
  const auto test = generate_corpus(world, test_opts, test_rng);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  world.vocab.save(dir / "vocab.txt");
  world.confusion.save(dir / "confusion.tsv", world.vocab);
  world.resources.save(dir / "pronunciation.tsv", dir / "glyph.tsv", world.vocab);
  save_corpus(dir / "train.tsv", train, world.vocab);
  save_corpus(dir / "test.tsv", test, world.vocab);
  write_text(dir / "manifest.txt", rc.echo(""));

  out << rc.echo();
  out << "wrote " << train.size() << " training and " << test.size() << " test pairs to " << dir.string() << '\n';
  return kSuccess;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  const TrainConfig config = train_config_from(rc);
  const fs::path data_dir = require_path(rc, "data");
  const fs::path checkpoint = require_path(rc, "out");
  const fs::path corpus_path = rc.has_value("corpus") ? fs::path(rc.get("corpus")) : data_dir / "train.tsv";
  fs::path loss_log = rc.has_value("loss-log") ? fs::path(rc.get("loss-log")) : fs::path(checkpoint.string() + ".loss.csv");

  const DataBundle data = load_data_dir(data_dir);
  const ModelConfig model_config = config.model_config(data.vocab.size(), data.resources);
  const auto pairs = load_corpus(corpus_path, data.vocab);
  if (pairs.empty()) throw InputError(corpus_path.string() + ": no training pairs");
  for (const auto& p : pairs) {
    if (p.source.size() + 2 > model_config.max_length) {
      throw InputError(corpus_path.string() + ": sentence of " + std::to_string(p.source.size()) +
                       " characters exceeds max-length " + std::to_string(model_config.max_length));
    }
  }

  SpellerModel model(model_config, config.seed);
  if (model_config.fusion) model.set_resources(data.resources);
  model.set_inference_masking(config.mask_at_inference);

  out << rc.echo();
  std::ostringstream log;
  log << rc.echo() << "epoch,loss\n";
  const TrainResult result = train(model, pairs, config, [&](std::size_t epoch, double loss) {
    out << "epoch " << epoch + 1 << "/" << config.epochs << " loss " << format_double(loss) << '\n';
    log << epoch + 1 << ',' << format_double(loss) << '\n';
  });
  save_checkpoint(checkpoint, model, config.serialize());
  write_text(loss_log, log.str());
  out << "steps = " << result.steps << '\n' << "checkpoint = " << checkpoint.string() << '\n';
  return kSuccess;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
  const fs::path data_dir = require_path(rc, "data");
  const DataBundle data = load_data_dir(data_dir);
  std::string run_config;
  SpellerModel model = open_model(rc, data, &run_config);
  const fs::path corpus_path = rc.has_value("corpus") ? fs::path(rc.get("corpus")) : data_dir / "test.tsv";
  const auto golds = load_corpus(corpus_path, data.vocab);

  std::set<TokenId> filter;
  for (const auto& ch : utf8_chars(rc.get("filter-chars"))) {
    if (const auto id = data.vocab.find(ch)) filter.insert(*id);
  }
  const EvalReport report = evaluate(predict_sources(model, golds), golds, filter);

  std::ostringstream text;
  text << rc.echo() << "# inference-masking = " << (model.inference_masking() ? "on" : "off") << '\n'
       << format_report_table(report) << format_report_values(report);
  out << text.str();
  if (rc.has_value("report")) write_text(rc.get("report"), text.str());
  return kSuccess;
}

int cmd_predict(const RunConfig& rc, std::ostream& out) {
  const DataBundle data = load_data_dir(require_path(rc, "data"));
  std::string run_config;
  SpellerModel model = open_model(rc, data, &run_config);
  const fs::path input = require_path(rc, "input");
  std::ifstream in(input);
  if (!in) throw IoError("cannot open " + input.string());

  std::ostringstream result;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto tab = line.find('\t'); tab != std::string::npos) line.resize(tab);
    const auto prediction = predict_sentence(model, data.vocab.encode(line));
    result << data.vocab.decode(prediction) << '\n';
  }
  if (rc.has_value("output")) {
    write_text(rc.get("output"), rc.echo() + result.str());
    out << rc.echo() << "wrote predictions to " << rc.get("output") << '\n';
  } else {
    out << rc.echo() << result.str();
  }
  return kSuccess;
}

int cmd_inspect_mask(const RunConfig& rc, std::ostream& out) {
  const NGramMode mode = parse_ngram_mode(rc.get("ngram"));
  std::vector<std::string> tokens{"[cls]"};
  for (auto& ch : utf8_chars(rc.get("sentence"))) tokens.push_back(std::move(ch));
  tokens.push_back("[sep]");
  const std::size_t max_length = rc.get_size("max-length");
  if (tokens.size() > max_length) {
    throw InputError("sentence needs " + std::to_string(tokens.size()) + " positions, max-length is " +
                     std::to_string(max_length));
  }
  out << rc.echo();
  if (mode == NGramMode::none) {
    out << "bypass\n";
    return kSuccess;
  }
  const MaskIndices rows = build_mask_indices(mode, tokens.size());
  out << "index\ttoken\tmasked\n";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out << i << '\t' << tokens[i] << '\t';
    if (rows[i].empty()) out << '-';
    for (std::size_t k = 0; k < rows[i].size(); ++k) out << (k ? " " : "") << rows[i][k];
    out << '\n';
  }
  return kSuccess;
}

int cmd_grad_check(const RunConfig& rc, std::ostream& out) {
  const std::size_t width = rc.get_size("width");
  const std::size_t length = rc.get_size("length");
  if (width > 16) throw ConfigError("grad-check is limited to width <= 16");
  if (length == 0 || length > 8) throw ConfigError("grad-check needs 1 <= length <= 8");
  const double eps = rc.get_double("eps");
  const double threshold = rc.get_double("threshold");
  const std::uint64_t seed = rc.get_u64("seed");

  Rng rng(seed);
  const SyntheticWorld world = SyntheticWorld::create(rc.get_size("vocab-size"), rng);
  ModelConfig mc;
  mc.vocab_size = world.vocab.size();
  mc.max_length = length + 2;
  mc.width = width;
  mc.heads = rc.get_size("heads");
  mc.ffn_width = rc.get_size("ffn-width");
  mc.semantic_depth = rc.get_size("semantic-depth");
  mc.fusion_depth = rc.get_size("fusion-depth");
  mc.modality_width = rc.get_size("modality-width");
  mc.ngram = parse_ngram_mode(rc.get("ngram"));
  mc.fusion = rc.get_bool("fusion");
  mc.phoneme_count = mc.fusion ? world.resources.phoneme_symbols.size() : 0;
  mc.component_count = mc.fusion ? world.resources.component_count : 0;
  mc.init_std = rc.get_double("init-std");
  mc.dropout = 0.0;
  mc.validate();

  SpellerModel model(mc, seed);
  if (mc.fusion) model.set_resources(world.resources);
  std::vector<SentencePair> batch;
  for (int s = 0; s < 2; ++s) batch.push_back(corrupt(world.sample_sentence(length, rng), world.confusion, 0.3, 0.5, rng));

  const LossBuilder loss = [&](Graph& g) {
    Rng unused(0);
    return batch_loss(model, g, batch, false, unused);
  };
  const ParameterList params = model.parameters();
  std::vector<Tensor*> tensors;
  for (const auto& p : params) tensors.push_back(p.tensor);

  std::optional<ScopedGradientFault> fault;
  if (rc.has_value("fault-op")) fault.emplace(rc.get("fault-op"), 1.5);
  const auto report = finite_difference_check(loss, tensors, eps);

  out << rc.echo() << "group\tcoordinates\tmax_rel_error\tmax_abs_error\tstatus\n";
  bool ok = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const bool pass = report[k].max_relative_error < threshold;
    ok = ok && pass;
    worst = std::max(worst, report[k].max_relative_error);
    char err[64];
    std::snprintf(err, sizeof err, "%.3e\t%.3e", report[k].max_relative_error, report[k].max_abs_error);
    out << params[k].name << '\t' << report[k].coordinates << '\t' << err << '\t' << (pass ? "PASS" : "FAIL") << '\n';
  }
  out << "groups = " << params.size() << '\n'
      << "max_rel_error = " << format_double(worst) << '\n'
      << "result = " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kSuccess : kGradCheckFailure;
}

struct Command {
  std::string name;
  std::string description;
  std::vector<RunConfig::Option> options;
  int (*handler)(const RunConfig&, std::ostream&);
};

std::vector<Command> commands() {
  std::vector<RunConfig::Option> train_opts = {
      {"data", "", "directory with vocab.txt, pronunciation.tsv, glyph.tsv"},
      {"corpus", "", "training corpus (default: <data>/train.tsv)"},
      {"out", "", "checkpoint path"},
      {"loss-log", "", "per-epoch loss CSV (default: <out>.loss.csv)"},
      {"lr", "5e-5", "AdamW learning rate"},
      {"epochs", "10", "training epochs"},
      {"batch-size", "32", "sentences per update"},
      {"weight-decay", "0.01", "decoupled weight decay"},
      {"seed", "0", "initialisation and shuffling seed"},
  };
  for (auto& o : model_options()) train_opts.push_back(o);

  const std::vector<RunConfig::Option> eval_opts = {
      {"checkpoint", "", "checkpoint path"},
      {"data", "", "directory with vocab.txt, pronunciation.tsv, glyph.tsv"},
      {"corpus", "", "evaluation corpus (default: <data>/test.tsv)"},
      {"mask-at-inference", "", "on/off; default taken from the checkpoint"},
      {"filter-chars", "", "drop changes whose gold character is one of these"},
      {"report", "", "also write the report to this file"},
  };
  const std::vector<RunConfig::Option> predict_opts = {
      {"checkpoint", "", "checkpoint path"},
      {"data", "", "directory with vocab.txt, pronunciation.tsv, glyph.tsv"},
      {"input", "", "one sentence per line (text after a TAB is ignored)"},
      {"output", "", "write predictions here instead of stdout"},
      {"mask-at-inference", "", "on/off; default taken from the checkpoint"},
  };
  return {
      {"gen-data",
       "Generate a synthetic corpus with confusion set and modality tables",
       {{"out", "", "output directory"},
        {"seed", "0", "generator seed"},
        {"vocab-size", "50", "vocabulary size including the 5 special tokens"},
        {"n-sentences", "200", "training pairs"},
        {"n-test", "0", "held-out pairs"},
        {"min-length", "8", "minimum characters per sentence"},
        {"max-length", "16", "maximum characters per sentence"},
        {"error-rate", "0.15", "per-character corruption probability"},
        {"adjacent-error-rate", "0", "probability a corruption also hits a neighbour"},
        {"cluster-size", "3", "characters per confusion cluster"},
        {"branching", "3", "successors per character in the sentence chain"}},
       cmd_gen_data},
      {"train", "Train a model and write a checkpoint", train_opts, cmd_train},
      {"eval", "Sentence-level detection/correction metrics", eval_opts, cmd_eval},
      {"predict", "Correct sentences with a trained model", predict_opts, cmd_predict},
      {"inspect-mask",
       "Print the n-gram mask indices for a sentence",
       {{"sentence", "", "input sentence"},
        {"ngram", "trigram", "n-gram mode"},
        {"max-length", "128", "maximum positions including [cls]/[sep]"}},
       cmd_inspect_mask},
      {"grad-check",
       "Compare backprop gradients with central differences on a toy model",
       {{"width", "8", "hidden size (<= 16)"},
        {"heads", "2", "attention heads"},
        {"ffn-width", "16", "feed-forward inner size"},
        {"vocab-size", "24", "vocabulary size"},
        {"length", "6", "characters per sentence (<= 8)"},
        {"semantic-depth", "1", "semantic encoder layers"},
        {"fusion-depth", "3", "fusion encoder layers"},
        {"modality-width", "4", "phonetic/glyph encoder size"},
        {"ngram", "trigram", "n-gram mode"},
        {"fusion", "on", "multi-modal fusion (on/off)"},
        {"init-std", "0.3", "stddev of weight initialisation"},
        {"seed", "0", "seed"},
        {"eps", "1e-5", "finite-difference step"},
        {"threshold", "1e-4", "maximum allowed relative error"},
        {"fault-op", "", "test fixture: corrupt the gradient rule of this op", true}},
       cmd_grad_check},
  };
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_seed) {
  CLI::App app{"n-gram masked, gated multi-modal spelling correction", "nmsp"};
  app.require_subcommand(1);
  auto specs = commands();
  std::vector<RunConfig> configs;
  configs.reserve(specs.size());
  std::vector<CLI::App*> subs;
  for (auto& spec : specs) {
    configs.emplace_back(spec.name, spec.options);
    subs.push_back(app.add_subcommand(spec.name, spec.description));
    configs.back().bind(*subs.back());
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }

  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      configs[i].resolve(env_seed);
      return specs[i].handler(configs[i], out);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kValidationError;
    } catch (const InputError& e) {
      err << "input error: " << e.what() << '\n';
      return kValidationError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kRuntimeFailure;
    }
  }
  return kValidationError;
}

}  // namespace nmsp::cli
