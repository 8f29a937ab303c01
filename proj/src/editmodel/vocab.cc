#include "reassert/editmodel/vocab.h"

#include <algorithm>
#include <map>

#include "reassert/error.h"

namespace reassert {

namespace {
const char* const kSpecialNames[Vocabulary::kNumSpecials] = {
    "<pad>", "<unk>", "<s>", "</s>", "<empty>"};
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  id_to_token_.reserve(tokens.size() + kNumSpecials);
  for (const char* s : kSpecialNames) id_to_token_.emplace_back(s);
  for (auto& t : tokens) id_to_token_.push_back(std::move(t));
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], int(i)).second) {
      throw Error("duplicate vocabulary entry: " + id_to_token_[i]);
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<TAP>& train, std::size_t max_size,
                             std::size_t min_count) {
  if (train.empty()) throw Error("cannot build a vocabulary from an empty training set");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& tap : train) {
    for (const auto& t : tap.focal_test) ++counts[t];
    for (const auto& t : tap.assertion) ++counts[t];
  }
  for (const char* s : kSpecialNames) counts.erase(s);
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts) {
    if (n >= min_count) ranked.emplace_back(tok, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (max_size > 0 && ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, n] : ranked) tokens.push_back(tok);
  return Vocabulary(std::move(tokens));
}

int Vocabulary::id(std::string_view token) const {
  auto found = find(token);
  return found ? *found : kUnk;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

}  // namespace reassert
