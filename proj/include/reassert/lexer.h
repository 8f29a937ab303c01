#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace reassert {

using TokenSeq = std::vector<std::string>;

/// Set of distinct tokens, kept sorted so that intersections are linear merges.
class TokenBag {
 public:
  TokenBag() = default;
  explicit TokenBag(std::vector<std::string> items);

  const std::vector<std::string>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  bool contains(std::string_view token) const;

  /// |this ∩ other|
  std::size_t intersection_size(const TokenBag& other) const;

  friend bool operator==(const TokenBag&, const TokenBag&) = default;

 private:
  std::vector<std::string> items_;
};

/// Java-like maximal-munch lexer. Comments and whitespace are dropped, string
/// and char literals are kept whole (quotes included). Throws LexError on an
/// unterminated literal.
TokenSeq tokenize(std::string_view source);

TokenBag dedup_bag(const TokenSeq& tokens);

/// Tokens joined by single spaces.
std::string join_tokens(const TokenSeq& tokens);

/// Whitespace split, used for pre-tokenized text.
TokenSeq split_whitespace(std::string_view text);

}  // namespace reassert
