#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "reassert/cli.h"
#include "reassert/editmodel/checkpoint.h"
#include "reassert/editmodel/generator.h"
#include "reassert/error.h"
#include "reassert/eval.h"

namespace reassert::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : Error {
  using Error::Error;
};

/// Config flags shared by every subcommand. Values given on the command line
/// replace those from --config.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) {
    app->add_option("--config", config_path_, "JSON run configuration");
    add(app, "--dataset", &RunConfig::dataset, "dataset directory or split file");
    add(app, "--format", &RunConfig::format, "dataset format: jsonl or text");
    add(app, "--coefficient", &RunConfig::coefficient, "jaccard, dice or overlap");
    add(app, "--seed", &RunConfig::seed, "random seed");
    add(app, "--vocab-max-size", &RunConfig::vocab_max_size, "vocabulary cap (0 = none)");
    add(app, "--vocab-min-count", &RunConfig::vocab_min_count, "minimum token count");
    add(app, "--embed-dim", &RunConfig::embed_dim, "token embedding width");
    add(app, "--action-dim", &RunConfig::action_dim, "edit action embedding width");
    add(app, "--encoder-hidden", &RunConfig::encoder_hidden, "encoder LSTM width per direction");
    add(app, "--decoder-hidden", &RunConfig::decoder_hidden, "decoder LSTM width");
    add(app, "--lr", &RunConfig::lr, "Adam learning rate");
    add(app, "--clip", &RunConfig::clip, "global gradient norm clip");
    add(app, "--batch-size", &RunConfig::batch_size, "examples per update");
    add(app, "--dropout", &RunConfig::dropout, "dropout rate");
    add(app, "--max-input-len", &RunConfig::max_input_len, "input truncation length");
    add(app, "--patience", &RunConfig::patience, "epochs without improvement before stopping");
    add(app, "--max-epochs", &RunConfig::max_epochs, "epoch limit");
    add(app, "--max-decode-len", &RunConfig::max_decode_len, "generation length limit");
    add(app, "--beam-width", &RunConfig::beam_width, "1 = greedy decoding");
    add(app, "--embedding-mode", &RunConfig::embedding_mode, "trainable or pretrained");
    add(app, "--embeddings", &RunConfig::embeddings, "pre-trained vector file");
    add(app, "--threads", &RunConfig::threads, "worker threads for batch generation");
  }

  RunConfig resolve() const {
    RunConfig c = config_path_.empty() ? RunConfig{} : load_run_config(config_path_);
    for (const auto& [opt, apply] : overrides_) {
      if (opt->count() > 0) apply(c);
    }
    try {
      c.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return c;
  }

 private:
  template <typename F>
  void add(CLI::App* app, const std::string& name, F RunConfig::*field, const std::string& help) {
    auto* opt = app->add_option(name, flags_.*field, help);
    overrides_.emplace_back(opt, [this, field](RunConfig& c) { c.*field = flags_.*field; });
  }

  std::string config_path_;
  RunConfig flags_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides_;
};

class Context {
 public:
  Context(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  std::ostream& log() { return err_ << "reassert: "; }

  /// JSON result to --out when given, else stdout.
  void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
      out_ << j.dump(2) << '\n';
      return;
    }
    write_text(out_path, j.dump(2) + "\n");
  }
  void emit_stdout(const json& j) { out_ << j.dump(2) << '\n'; }
  std::ostream& out() { return out_; }

  static void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed: " + path.string());
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw Error("no such file: " + p.string());
}

Dataset load(const RunConfig& cfg, Context& ctx) {
  require(!cfg.dataset.empty(), "--dataset is required");
  require_exists(cfg.dataset);
  LoadReport report;
  Dataset d = load_dataset(cfg.dataset, cfg.data_format(), &report);
  ctx.log() << "loaded " << cfg.dataset << ": train " << d.train.size() << ", valid "
            << d.validation.size() << ", test " << d.test.size() << '\n';
  if (report.rejected > 0) {
    ctx.log() << report.rejected << " records rejected\n";
    for (const auto& r : report.reasons) ctx.log() << "  " << r << '\n';
  }
  if (d.train.empty()) throw Error(cfg.dataset + ": training split is empty");
  return d;
}

Retriever make_retriever(const std::vector<TAP>& corpus, const RunConfig& cfg,
                         const std::string& index_path, Context& ctx) {
  if (index_path.empty()) return Retriever(corpus, cfg.similarity());
  require_exists(index_path);
  auto index = RetrievalIndex::load(index_path);
  if (index.coefficient() != cfg.similarity()) {
    ctx.log() << "index was built with " << coefficient_name(index.coefficient()) << '\n';
  }
  return Retriever(corpus, std::move(index));
}

SplitKind pick_split(const std::string& name, const Dataset& d) {
  if (name.empty()) return d.test.empty() ? SplitKind::Train : SplitKind::Test;
  auto kind = parse_split_kind(name);
  require(kind.has_value(), "unknown split '" + name + "' (train, valid, test)");
  return *kind;
}

/// A TAP from the retrieval corpus itself must not retrieve itself.
std::optional<std::int64_t> self_exclusion(SplitKind kind, const TAP& tap) {
  if (kind == SplitKind::Train) return tap.id;
  return std::nullopt;
}

TokenSeq lex_line(const std::string& line) {
  try {
    return tokenize(line);
  } catch (const LexError&) {
    return split_whitespace(line);
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  require_exists(path);
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/// A jsonl split file, a parallel-text split directory, or plain lines.
std::vector<TAP> read_split_or_lines(const fs::path& path) {
  require_exists(path);
  if (fs::is_directory(path)) return load_split(path, DataFormat::ParallelText);
  if (path.extension() == ".jsonl") return load_split(path, DataFormat::Jsonl);
  std::vector<TAP> rows;
  std::int64_t id = 0;
  for (const auto& line : read_lines(path)) rows.push_back({id++, lex_line(line), {}});
  return rows;
}

int cmd_index(const RunConfig& cfg, const std::string& index_path, Context& ctx) {
  require(!index_path.empty(), "index needs --index <output path>");
  Dataset d = load(cfg, ctx);
  auto index = build_index(d.train, cfg.similarity());
  index.save(index_path);
  ctx.emit_stdout({{"index", index_path},
                   {"entries", index.size()},
                   {"coefficient", coefficient_name(index.coefficient())}});
  return kExitOk;
}

int cmd_retrieve(const RunConfig& cfg, const std::string& index_path, const std::string& query,
                 const std::string& out_path, Context& ctx) {
  require(!query.empty(), "retrieve needs --query <focal-test source>");
  Dataset d = load(cfg, ctx);
  Retriever retriever = make_retriever(d.train, cfg, index_path, ctx);
  auto r = retriever.retrieve_top1(tokenize(query));
  ctx.emit({{"tap_id", r.tap_id},
            {"score", r.score},
            {"focal_test", join_tokens(r.retrieved_focal_test)},
            {"assertion", join_tokens(r.retrieved_assertion)}},
           out_path);
  return kExitOk;
}

int cmd_build_edits(const RunConfig& cfg, const std::string& index_path,
                    const std::string& split, const std::string& out_path, Context& ctx) {
  Dataset d = load(cfg, ctx);
  SplitKind kind = split.empty() ? SplitKind::Train : pick_split(split, d);
  Retriever retriever = make_retriever(d.train, cfg, index_path, ctx);
  std::ostringstream lines;
  for (const auto& tap : d.split(kind)) {
    auto r = retriever.retrieve_top1(tap.focal_test, self_exclusion(kind, tap));
    auto edits = align(r.retrieved_focal_test, tap.focal_test);
    truncate(edits, cfg.max_input_len);
    json row = {{"id", tap.id},
                {"retrieved_id", r.tap_id},
                {"score", r.score},
                {"retrieved_assertion", r.retrieved_assertion},
                {"assertion", tap.assertion},
                {"edits", edits_to_json(edits)}};
    lines << row.dump() << '\n';
  }
  if (out_path.empty()) {
    ctx.out() << lines.str();
  } else {
    Context::write_text(out_path, lines.str());
  }
  ctx.log() << "wrote " << d.split(kind).size() << " edit sequences for split "
            << split_name(kind) << '\n';
  return kExitOk;
}

json history_json(const TrainResult& r) {
  json h = json::array();
  for (const auto& e : r.history) {
    h.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"valid_perplexity", e.valid_perplexity},
                 {"improved", e.improved}});
  }
  return h;
}

int cmd_train(const RunConfig& cfg, const std::string& index_path,
              const std::string& checkpoint_path, const std::string& out_path, Context& ctx) {
  require(!checkpoint_path.empty(), "train needs --checkpoint <output path>");
  Dataset d = load(cfg, ctx);
  Retriever retriever = make_retriever(d.train, cfg, index_path, ctx);
  Vocabulary vocab = Vocabulary::build(d.train, cfg.vocab_max_size, cfg.vocab_min_count);
  auto train_pairs = build_training_pairs(d.train, retriever, vocab, cfg.max_input_len);
  auto valid_pairs = build_training_pairs(d.validation, retriever, vocab, cfg.max_input_len);
  ctx.log() << "vocabulary " << vocab.size() << ", pairs " << train_pairs.size() << " train / "
            << valid_pairs.size() << " valid\n";

  EditModel<float> model(cfg.model_config(), vocab.size());
  nn::Rng rng(cfg.seed);
  model.init(rng);
  if (cfg.embedding_mode == "pretrained") {
    require_exists(cfg.embeddings);
    auto rows = model.load_pretrained_embeddings(cfg.embeddings, vocab);
    ctx.log() << "loaded " << rows << " pre-trained vectors\n";
  }
  ctx.log() << model.num_scalars() << " parameters\n";

  auto on_epoch = [&](const EpochReport& e, EditModel<float>&) {
    ctx.log() << "epoch " << e.epoch << " loss " << e.train_loss << " perplexity "
              << e.valid_perplexity << (e.improved ? " *" : "") << '\n';
    return true;
  };
  TrainResult result = train(model, train_pairs, valid_pairs, cfg.train_config(), rng, on_epoch);

  json summary = {{"checkpoint", checkpoint_path},
                  {"epochs", result.history.size()},
                  {"best_epoch", result.best_epoch},
                  {"best_perplexity", result.best_perplexity},
                  {"stop_reason", result.stop_reason},
                  {"vocab_size", vocab.size()},
                  {"train_pairs", train_pairs.size()},
                  {"valid_pairs", valid_pairs.size()}};
  json extra = {{"run_config", to_json(cfg)}, {"summary", summary}, {"history", history_json(result)}};
  save_checkpoint(model, vocab, checkpoint_path, extra);
  summary["history"] = history_json(result);
  ctx.emit(summary, out_path);
  return kExitOk;
}

int cmd_generate(const RunConfig& cfg, const std::string& index_path,
                 const std::string& checkpoint_path, const std::string& query,
                 const std::string& batch_path, const std::string& out_path, Context& ctx) {
  require(!checkpoint_path.empty(), "generate needs --checkpoint");
  require(query.empty() != batch_path.empty(), "generate needs exactly one of --query or --batch");
  require_exists(checkpoint_path);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Dataset d = load(cfg, ctx);
  Retriever retriever = make_retriever(d.train, cfg, index_path, ctx);
  GenerateOptions options{cfg.max_decode_len, cfg.beam_width};
  Generator generator(*ckpt.model, ckpt.vocab, retriever, options);

  if (!query.empty()) {
    auto r = generator.generate(tokenize(query));
    ctx.emit({{"assertion", join_tokens(r.assertion)},
              {"failed", r.failed},
              {"retrieved_id", r.retrieved.tap_id},
              {"retrieved_assertion", join_tokens(r.retrieved.retrieved_assertion)}},
             out_path);
    return kExitOk;
  }

  std::vector<TokenSeq> queries;
  for (auto& row : read_split_or_lines(batch_path)) queries.push_back(std::move(row.focal_test));
  auto results = generator.generate_batch(queries, cfg.threads);
  std::size_t failed = 0;
  std::string text;
  json predictions = json::array();
  for (const auto& r : results) {
    failed += r.failed;
    text += join_tokens(r.assertion);
    text += '\n';
    predictions.push_back(join_tokens(r.assertion));
  }
  ctx.log() << "generated " << results.size() << " assertions, " << failed << " empty\n";
  if (out_path.empty()) {
    ctx.emit_stdout({{"count", results.size()}, {"failed", failed}, {"predictions", predictions}});
  } else {
    Context::write_text(out_path, text);
    ctx.emit_stdout({{"count", results.size()}, {"failed", failed}, {"predictions_file", out_path}});
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& predictions_path, const std::string& references_path,
                 bool table, const std::string& out_path, Context& ctx) {
  require(!predictions_path.empty() && !references_path.empty(),
          "evaluate needs --predictions and --references");
  std::vector<TokenSeq> predictions;
  for (const auto& line : read_lines(predictions_path)) predictions.push_back(lex_line(line));
  std::vector<TokenSeq> references;
  for (auto& row : read_split_or_lines(references_path)) {
    // Plain-line references carry the assertion in the focal_test slot.
    references.push_back(row.assertion.empty() ? std::move(row.focal_test) : std::move(row.assertion));
  }
  EvalReport report = evaluate(predictions, references);
  if (table) {
    ctx.out() << format_table(report);
  } else {
    ctx.emit(to_json(report), out_path);
  }
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const std::string& index_path, const std::string& split,
                bool table, const std::string& out_path, Context& ctx) {
  Dataset d = load(cfg, ctx);
  SplitKind kind = pick_split(split, d);
  const auto& taps = d.split(kind);
  if (taps.empty()) throw Error("split " + std::string(split_name(kind)) + " is empty");
  Retriever retriever = make_retriever(d.train, cfg, index_path, ctx);
  std::vector<TokenSeq> retrieved, truth;
  for (const auto& tap : taps) {
    retrieved.push_back(retriever.retrieve_top1(tap.focal_test, self_exclusion(kind, tap)).retrieved_assertion);
    truth.push_back(tap.assertion);
  }
  auto hist = edit_distance_table(retrieved, truth);
  if (table) {
    ctx.out() << format_table(hist);
    return kExitOk;
  }
  ctx.emit({{"split", split_name(kind)},
            {"size", taps.size()},
            {"coefficient", coefficient_name(retriever.index().coefficient())},
            {"edit_distance", to_json(hist)},
            {"retrieval_exact_match", round2(exact_match_accuracy(retrieved, truth))},
            {"stats", to_json(split_stats(taps))}},
           out_path);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieve-and-edit unit test assertion generation", "reassert"};
  app.require_subcommand(1);

  std::string index_path, checkpoint_path, out_path, split, query, batch_path, predictions_path,
      references_path;
  bool table = false;
  std::vector<std::unique_ptr<ConfigFlags>> flags;
  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    flags.push_back(std::make_unique<ConfigFlags>(s));
    s->add_option("--out", out_path, "output path (default stdout)");
    return s;
  };

  auto* index = sub("index", "build and save the retrieval index over the training split");
  index->add_option("--index", index_path, "index output path");
  auto* retrieve = sub("retrieve", "top-1 TAP for a focal-test");
  retrieve->add_option("--index", index_path, "saved index");
  retrieve->add_option("--query", query, "focal-test source text");
  auto* build_edits = sub("build-edits", "edit sequences for a split as JSON lines");
  build_edits->add_option("--index", index_path, "saved index");
  build_edits->add_option("--split", split, "train, valid or test (default train)");
  auto* train_cmd = sub("train", "train the edit model");
  train_cmd->add_option("--index", index_path, "saved index");
  train_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint output path");
  auto* generate = sub("generate", "generate assertions for one query or a batch");
  generate->add_option("--index", index_path, "saved index");
  generate->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
  generate->add_option("--query", query, "focal-test source text");
  generate->add_option("--batch", batch_path, "split file/directory or one focal-test per line");
  auto* evaluate_cmd = sub("evaluate", "accuracy, BLEU and per-type report");
  evaluate_cmd->add_option("--predictions", predictions_path, "one assertion per line");
  evaluate_cmd->add_option("--references", references_path, "split file/directory or one assertion per line");
  evaluate_cmd->add_flag("--table", table, "print an aligned text table instead of JSON");
  auto* analyze = sub("analyze", "retrieval edit-distance histogram and split statistics");
  analyze->add_option("--index", index_path, "saved index");
  analyze->add_option("--split", split, "train, valid or test (default test, else train)");
  analyze->add_flag("--table", table, "print the histogram as a text table");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "reassert: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  Context ctx(out, err);
  try {
    auto* chosen = app.get_subcommands().front();
    std::size_t which = 0;
    for (auto* s : {index, retrieve, build_edits, train_cmd, generate, evaluate_cmd, analyze}) {
      if (s == chosen) break;
      ++which;
    }
    RunConfig cfg = flags[which]->resolve();
    if (chosen == index) return cmd_index(cfg, index_path, ctx);
    if (chosen == retrieve) return cmd_retrieve(cfg, index_path, query, out_path, ctx);
    if (chosen == build_edits) return cmd_build_edits(cfg, index_path, split, out_path, ctx);
    if (chosen == train_cmd) return cmd_train(cfg, index_path, checkpoint_path, out_path, ctx);
    if (chosen == generate) {
      return cmd_generate(cfg, index_path, checkpoint_path, query, batch_path, out_path, ctx);
    }
    if (chosen == evaluate_cmd) return cmd_evaluate(predictions_path, references_path, table, out_path, ctx);
    return cmd_analyze(cfg, index_path, split, table, out_path, ctx);
  } catch (const UsageError& e) {
    err << "reassert: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "reassert: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace reassert::cli
