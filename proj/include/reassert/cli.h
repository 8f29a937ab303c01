#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "reassert/corpus.h"
#include "reassert/editmodel/model.h"
#include "reassert/editmodel/trainer.h"
#include "reassert/retrieval.h"

namespace reassert::cli {

/// Everything a pipeline run depends on. The JSON config file uses these
/// field names; command-line flags override file values.
struct RunConfig {
  std::string dataset;
  std::string format = "jsonl";
  std::string coefficient = "jaccard";
  std::size_t vocab_max_size = 30000;
  std::size_t vocab_min_count = 1;
  std::size_t embed_dim = 300;
  std::size_t action_dim = 16;
  std::size_t encoder_hidden = 256;
  std::size_t decoder_hidden = 512;
  double lr = 0.001;
  double clip = 5.0;
  std::size_t batch_size = 8;
  double dropout = 0.2;
  std::size_t max_input_len = 512;
  std::size_t patience = 5;
  std::size_t max_epochs = 200;
  std::size_t max_decode_len = 64;
  std::size_t beam_width = 1;
  std::uint64_t seed = 0;
  std::string embedding_mode = "trainable";  // or "pretrained"
  std::string embeddings;                    // text vectors for "pretrained"
  std::size_t threads = 1;

  /// Throws Error on a non-positive dimension or an unknown enum value.
  void validate() const;

  Coefficient similarity() const;
  DataFormat data_format() const;
  ModelConfig model_config() const;
  TrainConfig train_config() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point: `args` excludes the program name. JSON results go to `out`
/// (or an --out file), logs and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace reassert::cli
