#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reassert/corpus.h"

namespace reassert {

/// Token <-> id map. Specials occupy ids 0..4.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;
  static constexpr int kEmpty = 4;
  static constexpr int kNumSpecials = 5;

  /// `tokens` excludes the specials, which are prepended.
  explicit Vocabulary(std::vector<std::string> tokens = {});

  /// Counts focal-test and assertion tokens of the training TAPs; keeps those
  /// seen at least `min_count` times, ordered by descending count then
  /// lexicographically, capped at `max_size` non-special entries (0 = no cap).
  static Vocabulary build(const std::vector<TAP>& train, std::size_t max_size,
                          std::size_t min_count);

  std::size_t size() const { return id_to_token_.size(); }
  /// UNK when absent.
  int id(std::string_view token) const;
  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return id_to_token_.at(std::size_t(id)); }
  /// All entries including the specials, in id order.
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  static bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace reassert
