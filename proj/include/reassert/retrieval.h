#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reassert/corpus.h"
#include "reassert/lexer.h"

namespace reassert {

enum class Coefficient : std::uint8_t { Jaccard = 0, Dice = 1, Overlap = 2 };

std::optional<Coefficient> parse_coefficient(std::string_view name);
std::string_view coefficient_name(Coefficient c);

/// Similarity as an exact fraction. Ranking and ties compare by
/// cross-multiplication, never by rounded doubles.
struct Score {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const { return den == 0 ? 0.0 : double(num) / double(den); }
};

/// Compares by value; a zero denominator counts as 0.
int compare(const Score& a, const Score& b);

/// Score from raw set sizes. Dice is |A∩B| / (|A|+|B|), without the usual
/// factor of two; rankings match the standard form.
Score similarity_from_counts(std::size_t inter, std::size_t size_a,
                             std::size_t size_b, Coefficient c);

Score similarity_score(const TokenBag& a, const TokenBag& b, Coefficient c);

inline double similarity(const TokenBag& a, const TokenBag& b, Coefficient c) {
  return similarity_score(a, b, c).value();
}

struct IndexEntry {
  std::int64_t tap_id = 0;
  TokenBag bag;
};

struct Hit {
  std::int64_t tap_id = 0;
  std::size_t position = 0;  // entry position in the index
  Score score;
};

/// Top-1 similarity index over focal-test token bags. Immutable once built.
class RetrievalIndex {
 public:
  RetrievalIndex(std::vector<IndexEntry> entries, Coefficient c);

  Coefficient coefficient() const { return coefficient_; }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Best entry by score, ties to the lowest tap_id; `exclude_id` is never
  /// returned. Uses the posting lists. Throws if every entry is excluded.
  Hit top1(const TokenBag& query,
           std::optional<std::int64_t> exclude_id = std::nullopt) const;

  /// Same contract as top1, by scanning every entry.
  Hit top1_linear(const TokenBag& query,
                  std::optional<std::int64_t> exclude_id = std::nullopt) const;

  /// Binary layout (little-endian): "RIDX", u32 version, u8 coefficient,
  /// u64 entry count; per entry i64 tap_id, u32 token count, then per token
  /// u32 byte length and UTF-8 bytes.
  void save(const std::filesystem::path& path) const;
  static RetrievalIndex load(const std::filesystem::path& path);

 private:
  bool better(const Hit& cand, const Hit& best) const;

  std::vector<IndexEntry> entries_;
  Coefficient coefficient_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings_;
};

RetrievalIndex build_index(const std::vector<TAP>& corpus, Coefficient c);

struct RetrievalResult {
  std::int64_t tap_id = 0;
  double score = 0.0;
  TokenSeq retrieved_focal_test;
  TokenSeq retrieved_assertion;
};

/// Index paired with the TAPs it was built from, so hits resolve to sequences.
class Retriever {
 public:
  Retriever(const std::vector<TAP>& corpus, RetrievalIndex index);
  Retriever(const std::vector<TAP>& corpus, Coefficient c);

  const RetrievalIndex& index() const { return index_; }

  RetrievalResult retrieve_top1(
      const TokenSeq& query_focal_test,
      std::optional<std::int64_t> exclude_id = std::nullopt) const;

 private:
  const std::vector<TAP>* corpus_;
  RetrievalIndex index_;
  std::unordered_map<std::int64_t, std::size_t> by_id_;
};

}  // namespace reassert
