#include "reassert/editmodel/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "reassert/error.h"

namespace reassert {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host order");

namespace {
constexpr char kMagic[4] = {'E', 'D', 'A', 'S'};
}

void save_checkpoint(EditModel<float>& model, const Vocabulary& vocab,
                     const std::filesystem::path& path, const nlohmann::json& extra) {
  nlohmann::json header;
  header["config"] = to_json(model.config());
  header["vocab"] = vocab.tokens();
  auto params = nlohmann::json::array();
  for (auto* p : model.parameters()) {
    params.push_back({{"name", p->name},
                      {"shape", {p->shape.rows, p->shape.cols}},
                      {"trainable", p->requires_grad},
                      {"bytes", p->size() * sizeof(float)}});
  }
  header["params"] = std::move(params);
  header["extra"] = extra;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), std::streamsize(text.size()));
  for (auto* p : model.parameters()) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              std::streamsize(p->size() * sizeof(float)));
  }
  if (!out) throw Error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string where = path.string() + ": ";
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(where + "not a checkpoint (bad magic)");
  }
  std::uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof version)) {
    throw FormatError(where + "truncated header");
  }
  if (version != kCheckpointVersion) {
    throw FormatError(where + "unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) throw FormatError(where + "truncated header");
  const auto file_size = std::filesystem::file_size(path);
  if (len > file_size) throw FormatError(where + "header length exceeds file size");
  std::string text(len, '\0');
  if (!in.read(text.data(), std::streamsize(len))) throw FormatError(where + "truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "bad header JSON: " + e.what());
  }

  Checkpoint ck;
  try {
    ck.config = model_config_from_json(header.at("config"));
    auto tokens = header.at("vocab").get<std::vector<std::string>>();
    if (tokens.size() < std::size_t(Vocabulary::kNumSpecials)) {
      throw FormatError(where + "vocabulary lacks special entries");
    }
    ck.vocab = Vocabulary(std::vector<std::string>(tokens.begin() + Vocabulary::kNumSpecials, tokens.end()));
    if (ck.vocab.tokens() != tokens) throw FormatError(where + "special vocabulary entries out of order");
    ck.extra = header.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "bad header field: " + e.what());
  }

  ck.model = std::make_unique<EditModel<float>>(ck.config, ck.vocab.size());
  auto params = ck.model->parameters();
  const auto& declared = header.at("params");
  if (!declared.is_array() || declared.size() != params.size()) {
    throw FormatError(where + "parameter list does not match the architecture");
  }
  std::uint64_t expected_bytes = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& d = declared[i];
    auto* p = params[i];
    auto shape = d.at("shape").get<std::vector<std::size_t>>();
    if (d.at("name").get<std::string>() != p->name || shape.size() != 2 ||
        shape[0] != p->shape.rows || shape[1] != p->shape.cols) {
      throw FormatError(where + "shape header mismatch for " + p->name);
    }
    if (d.at("bytes").get<std::uint64_t>() != p->size() * sizeof(float)) {
      throw FormatError(where + "declared blob length mismatch for " + p->name);
    }
    p->requires_grad = d.value("trainable", true);
    expected_bytes += p->size() * sizeof(float);
  }
  const std::uint64_t data_start = 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t) + len;
  if (file_size != data_start + expected_bytes) {
    throw FormatError(where + "blob section is " + std::to_string(file_size - data_start) +
                      " bytes, header declares " + std::to_string(expected_bytes));
  }
  for (auto* p : params) {
    if (!in.read(reinterpret_cast<char*>(p->value.data()), std::streamsize(p->size() * sizeof(float)))) {
      throw FormatError(where + "truncated blob for " + p->name);
    }
  }
  return ck;
}

}  // namespace reassert
