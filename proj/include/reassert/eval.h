#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "reassert/corpus.h"
#include "reassert/lexer.h"

namespace reassert {

/// Percentage of predictions token-identical to their reference.
double exact_match_accuracy(const std::vector<TokenSeq>& predictions,
                            const std::vector<TokenSeq>& references);

struct BleuStats {
  std::array<std::size_t, 4> matches{};  // clipped n-gram matches, n = 1..4
  std::array<std::size_t, 4> totals{};   // candidate n-grams
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  double brevity_penalty = 0.0;
  double score = 0.0;  // 0..100
};

/// Corpus BLEU-4 with pooled clipped counts and brevity penalty, unsmoothed:
/// any zero n-gram precision gives 0.
BleuStats corpus_bleu_stats(const std::vector<TokenSeq>& predictions,
                            const std::vector<TokenSeq>& references);

inline double corpus_bleu(const std::vector<TokenSeq>& predictions,
                          const std::vector<TokenSeq>& references) {
  return corpus_bleu_stats(predictions, references).score;
}

/// Buckets: 0, 1, 2, 3, (3,5], (5,10], >10.
inline constexpr std::array<const char*, 7> kDistanceBuckets = {
    "0", "1", "2", "3", "(3,5]", "(5,10]", ">10"};

std::size_t distance_bucket(std::size_t distance);

struct DistanceHistogram {
  std::array<std::size_t, 7> counts{};
  std::size_t total() const;
};

DistanceHistogram distance_histogram(const std::vector<std::size_t>& distances);

/// Histogram of edit_distance(retrieved[i], ground_truth[i]).
DistanceHistogram edit_distance_table(const std::vector<TokenSeq>& retrieved,
                                      const std::vector<TokenSeq>& ground_truth);

struct TypeRow {
  std::size_t total = 0;
  std::size_t correct = 0;
  double ratio() const { return total ? double(correct) / double(total) : 0.0; }
};

/// References classified by assert type; classes with no reference omitted.
std::map<AssertType, TypeRow> per_type_report(const std::vector<TokenSeq>& predictions,
                                              const std::vector<TokenSeq>& references);

struct EvalReport {
  std::size_t total = 0;
  double accuracy = 0.0;
  BleuStats bleu;
  std::map<AssertType, TypeRow> per_type;
};

EvalReport evaluate(const std::vector<TokenSeq>& predictions,
                    const std::vector<TokenSeq>& references);

/// 2-decimal rounding used in reports.
double round2(double v);

nlohmann::json to_json(const BleuStats& b);
nlohmann::json to_json(const DistanceHistogram& h);
nlohmann::json to_json(const std::map<AssertType, TypeRow>& rows);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const SplitStats& s);

std::string format_table(const EvalReport& r);
std::string format_table(const DistanceHistogram& h);

}  // namespace reassert
