#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reassert {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the lexer; carries the byte offset where the bad literal starts.
class LexError : public Error {
 public:
  LexError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Malformed input file; line is 1-based, 0 when not line-oriented.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace reassert
