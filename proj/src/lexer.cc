#include "reassert/lexer.h"

#include <algorithm>
#include <array>

#include "reassert/error.h"

namespace reassert {
namespace {

constexpr std::array<std::string_view, 16> kTwoCharOps = {
    "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "->", "::", "<<", ">>", "+=", "-=", "*=", "/="};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Bytes >= 0x80 belong to UTF-8 sequences; Java permits them in identifiers.
bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) { return is_ident_start(c) || is_digit(c); }

bool is_hex(unsigned char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  TokenSeq run() {
    TokenSeq out;
    while (pos_ < src_.size()) {
      unsigned char c = at(pos_);
      if (is_space(c)) {
        ++pos_;
      } else if (c == '/' && at(pos_ + 1) == '/') {
        skip_line_comment();
      } else if (c == '/' && at(pos_ + 1) == '*') {
        skip_block_comment();
      } else if (is_ident_start(c)) {
        out.emplace_back(take_while(is_ident_part));
      } else if (is_digit(c) || (c == '.' && is_digit(at(pos_ + 1)))) {
        out.emplace_back(number());
      } else if (c == '"') {
        out.emplace_back(src_.substr(pos_, 3) == "\"\"\"" ? text_block()
                                                          : quoted('"'));
      } else if (c == '\'') {
        out.emplace_back(quoted('\''));
      } else {
        out.emplace_back(op());
      }
    }
    return out;
  }

 private:
  unsigned char at(std::size_t i) const {
    return i < src_.size() ? static_cast<unsigned char>(src_[i]) : '\0';
  }

  template <typename Pred>
  std::string_view take_while(Pred pred) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && pred(at(pos_))) ++pos_;
    return src_.substr(start, pos_ - start);
  }

  void skip_line_comment() {
    while (pos_ < src_.size() && at(pos_) != '\n') ++pos_;
  }

  // An unterminated block comment swallows the rest of the input.
  void skip_block_comment() {
    auto end = src_.find("*/", pos_ + 2);
    pos_ = end == std::string_view::npos ? src_.size() : end + 2;
  }

  std::string_view number() {
    std::size_t start = pos_;
    auto digits = [](unsigned char c) { return is_digit(c) || c == '_'; };
    if (at(pos_) == '0' && (at(pos_ + 1) == 'x' || at(pos_ + 1) == 'X')) {
      pos_ += 2;
      take_while([](unsigned char c) { return is_hex(c) || c == '_'; });
    } else if (at(pos_) == '0' &&
               (at(pos_ + 1) == 'b' || at(pos_ + 1) == 'B')) {
      pos_ += 2;
      take_while([](unsigned char c) { return c == '0' || c == '1' || c == '_'; });
    } else {
      take_while(digits);
      if (at(pos_) == '.' && is_digit(at(pos_ + 1))) {
        ++pos_;
        take_while(digits);
      }
      if (at(pos_) == 'e' || at(pos_) == 'E') {
        std::size_t exp = pos_ + 1;
        if (at(exp) == '+' || at(exp) == '-') ++exp;
        if (is_digit(at(exp))) {
          pos_ = exp;
          take_while(digits);
        }
      }
    }
    unsigned char s = at(pos_);
    if (s == 'l' || s == 'L' || s == 'f' || s == 'F' || s == 'd' || s == 'D')
      ++pos_;
    return src_.substr(start, pos_ - start);
  }

  std::string_view quoted(char quote) {
    std::size_t start = pos_++;
    while (pos_ < src_.size()) {
      unsigned char c = at(pos_);
      if (c == '\\') {
        pos_ += 2;
      } else if (c == '\n') {
        break;
      } else if (c == static_cast<unsigned char>(quote)) {
        ++pos_;
        return src_.substr(start, pos_ - start);
      } else {
        ++pos_;
      }
    }
    throw LexError(quote == '"' ? "unterminated string literal"
                                : "unterminated char literal",
                   start);
  }

  std::string_view text_block() {
    std::size_t start = pos_;
    std::size_t i = pos_ + 3;
    while (i < src_.size()) {
      if (src_[i] == '\\') {
        i += 2;
      } else if (src_.substr(i, 3) == "\"\"\"") {
        pos_ = i + 3;
        return src_.substr(start, pos_ - start);
      } else {
        ++i;
      }
    }
    throw LexError("unterminated text block", start);
  }

  std::string_view op() {
    auto two = src_.substr(pos_, 2);
    if (two.size() == 2 &&
        std::find(kTwoCharOps.begin(), kTwoCharOps.end(), two) !=
            kTwoCharOps.end()) {
      pos_ += 2;
      return two;
    }
    return src_.substr(pos_++, 1);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

TokenBag::TokenBag(std::vector<std::string> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end());
  items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

bool TokenBag::contains(std::string_view token) const {
  return std::binary_search(items_.begin(), items_.end(), token);
}

std::size_t TokenBag::intersection_size(const TokenBag& other) const {
  std::size_t n = 0;
  auto a = items_.begin(), b = other.items_.begin();
  while (a != items_.end() && b != other.items_.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++n;
      ++a;
      ++b;
    }
  }
  return n;
}

TokenSeq tokenize(std::string_view source) { return Scanner(source).run(); }

TokenBag dedup_bag(const TokenSeq& tokens) { return TokenBag(tokens); }

std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

TokenSeq split_whitespace(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace reassert
