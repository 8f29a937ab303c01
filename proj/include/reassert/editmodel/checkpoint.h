#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"
#include "reassert/editmodel/model.h"
#include "reassert/editmodel/vocab.h"

namespace reassert {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  std::unique_ptr<EditModel<float>> model;
  /// Free-form run metadata stored in the header (training config, history).
  nlohmann::json extra = nlohmann::json::object();
};

/// Layout: "EDAS", u32 version, u64 header byte length, UTF-8 JSON header
/// (config, vocabulary, parameter names/shapes/byte lengths in order), then
/// the raw little-endian f32 arrays in header order.
void save_checkpoint(EditModel<float>& model, const Vocabulary& vocab,
                     const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace reassert
