#pragma once

// Slow reference implementations the fast code is checked against.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "reassert/lexer.h"
#include "reassert/retrieval.h"

namespace reassert::testing {

/// Plain recursion over (i, j) without memoisation.
inline std::size_t levenshtein_brute(const TokenSeq& a, const TokenSeq& b, std::size_t i = 0,
                                     std::size_t j = 0) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return levenshtein_brute(a, b, i + 1, j + 1);
  return 1 + std::min({levenshtein_brute(a, b, i + 1, j), levenshtein_brute(a, b, i, j + 1),
                       levenshtein_brute(a, b, i + 1, j + 1)});
}

inline std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

/// Set algebra on std::set copies, floating-point score.
inline double similarity_brute(const TokenBag& a, const TokenBag& b, Coefficient c) {
  std::vector<std::string> inter, uni;
  std::set_intersection(a.items().begin(), a.items().end(), b.items().begin(), b.items().end(),
                        std::back_inserter(inter));
  std::set_union(a.items().begin(), a.items().end(), b.items().begin(), b.items().end(),
                 std::back_inserter(uni));
  double i = double(inter.size());
  switch (c) {
    case Coefficient::Jaccard:
      return uni.empty() ? 0.0 : i / double(uni.size());
    case Coefficient::Dice:
      return a.size() + b.size() == 0 ? 0.0 : i / double(a.size() + b.size());
    case Coefficient::Overlap: {
      auto m = std::min(a.size(), b.size());
      return m == 0 ? 0.0 : i / double(m);
    }
  }
  return 0.0;
}

/// Every entry scored; ties keep the lowest tap id. Scores compared with a
/// relative tolerance, which is enough for bags of a few hundred tokens.
inline std::optional<std::int64_t> top1_brute(const std::vector<IndexEntry>& entries,
                                              const TokenBag& q, Coefficient c,
                                              std::optional<std::int64_t> exclude = std::nullopt) {
  std::optional<std::int64_t> best;
  double best_score = -1;
  for (const auto& e : entries) {
    if (exclude && e.tap_id == *exclude) continue;
    double s = similarity_brute(e.bag, q, c);
    if (s > best_score + 1e-12 || (std::abs(s - best_score) <= 1e-12 && e.tap_id < *best)) {
      best = e.tap_id;
      best_score = s;
    }
  }
  return best;
}

inline TokenSeq random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t alphabet) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, alphabet - 1);
  TokenSeq out(len(rng));
  for (auto& t : out) t = "t" + std::to_string(sym(rng));
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::path(REASSERT_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace reassert::testing
