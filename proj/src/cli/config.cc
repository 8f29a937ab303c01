#include <fstream>

#include "reassert/cli.h"
#include "reassert/error.h"

namespace reassert::cli {

void RunConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(std::string(name) + " must be positive");
  };
  positive(embed_dim, "embed_dim");
  positive(action_dim, "action_dim");
  positive(encoder_hidden, "encoder_hidden");
  positive(decoder_hidden, "decoder_hidden");
  positive(batch_size, "batch_size");
  positive(max_input_len, "max_input_len");
  positive(max_epochs, "max_epochs");
  positive(max_decode_len, "max_decode_len");
  positive(beam_width, "beam_width");
  positive(threads, "threads");
  if (!(lr > 0)) throw Error("lr must be positive");
  if (!(clip > 0)) throw Error("clip must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw Error("dropout must be in [0, 1)");
  similarity();
  data_format();
  if (embedding_mode != "trainable" && embedding_mode != "pretrained") {
    throw Error("embedding_mode must be trainable or pretrained, got " + embedding_mode);
  }
  if (embedding_mode == "pretrained" && embeddings.empty()) {
    throw Error("embedding_mode pretrained needs an embeddings file");
  }
}

Coefficient RunConfig::similarity() const {
  auto c = parse_coefficient(coefficient);
  if (!c) throw Error("unknown coefficient '" + coefficient + "' (jaccard, dice, overlap)");
  return *c;
}

DataFormat RunConfig::data_format() const {
  auto f = parse_data_format(format);
  if (!f) throw Error("unknown format '" + format + "' (jsonl, text)");
  return *f;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.embed_dim = embed_dim;
  m.action_dim = action_dim;
  m.encoder_hidden = encoder_hidden;
  m.decoder_hidden = decoder_hidden;
  m.dropout = dropout;
  m.embedding_mode =
      embedding_mode == "pretrained" ? EmbeddingMode::PretrainedFrozen : EmbeddingMode::Trainable;
  m.max_input_len = max_input_len;
  m.max_decode_len = max_decode_len;
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.adam.lr = lr;
  t.clip_norm = clip;
  t.batch_size = batch_size;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.seed = seed;
  return t;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"dataset", c.dataset},
          {"format", c.format},
          {"coefficient", c.coefficient},
          {"vocab_max_size", c.vocab_max_size},
          {"vocab_min_count", c.vocab_min_count},
          {"embed_dim", c.embed_dim},
          {"action_dim", c.action_dim},
          {"encoder_hidden", c.encoder_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"lr", c.lr},
          {"clip", c.clip},
          {"batch_size", c.batch_size},
          {"dropout", c.dropout},
          {"max_input_len", c.max_input_len},
          {"patience", c.patience},
          {"max_epochs", c.max_epochs},
          {"max_decode_len", c.max_decode_len},
          {"beam_width", c.beam_width},
          {"seed", c.seed},
          {"embedding_mode", c.embedding_mode},
          {"embeddings", c.embeddings},
          {"threads", c.threads}};
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  const nlohmann::json known = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error("unknown config key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("config key '") + key + "': " + e.what());
    }
  };
  get("dataset", c.dataset);
  get("format", c.format);
  get("coefficient", c.coefficient);
  get("vocab_max_size", c.vocab_max_size);
  get("vocab_min_count", c.vocab_min_count);
  get("embed_dim", c.embed_dim);
  get("action_dim", c.action_dim);
  get("encoder_hidden", c.encoder_hidden);
  get("decoder_hidden", c.decoder_hidden);
  get("lr", c.lr);
  get("clip", c.clip);
  get("batch_size", c.batch_size);
  get("dropout", c.dropout);
  get("max_input_len", c.max_input_len);
  get("patience", c.patience);
  get("max_epochs", c.max_epochs);
  get("max_decode_len", c.max_decode_len);
  get("beam_width", c.beam_width);
  get("seed", c.seed);
  get("embedding_mode", c.embedding_mode);
  get("embeddings", c.embeddings);
  get("threads", c.threads);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace reassert::cli
