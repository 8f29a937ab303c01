#include "reassert/eval.h"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "reassert/editseq.h"
#include "reassert/error.h"

namespace reassert {
namespace {

void check_lengths(const std::vector<TokenSeq>& p, const std::vector<TokenSeq>& r) {
  if (p.size() != r.size()) {
    throw Error("prediction/reference count mismatch: " + std::to_string(p.size()) + " vs " +
                std::to_string(r.size()));
  }
}

bool same(const TokenSeq& a, const TokenSeq& b) { return join_tokens(a) == join_tokens(b); }

using NGramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NGramCounts ngrams(const TokenSeq& s, std::size_t n) {
  NGramCounts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::vector<std::string_view> g(s.begin() + std::ptrdiff_t(i), s.begin() + std::ptrdiff_t(i + n));
    ++out[g];
  }
  return out;
}

}  // namespace

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double exact_match_accuracy(const std::vector<TokenSeq>& predictions,
                            const std::vector<TokenSeq>& references) {
  check_lengths(predictions, references);
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += same(predictions[i], references[i]);
  return 100.0 * double(hits) / double(predictions.size());
}

BleuStats corpus_bleu_stats(const std::vector<TokenSeq>& predictions,
                            const std::vector<TokenSeq>& references) {
  check_lengths(predictions, references);
  if (predictions.empty()) throw Error("corpus_bleu: empty corpus");
  BleuStats s;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& cand = predictions[i];
    const auto& ref = references[i];
    s.candidate_length += cand.size();
    s.reference_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      auto c = ngrams(cand, n);
      auto r = ngrams(ref, n);
      for (const auto& [g, count] : c) {
        auto it = r.find(g);
        if (it != r.end()) s.matches[n - 1] += std::min(count, it->second);
        s.totals[n - 1] += count;
      }
    }
  }
  if (s.candidate_length == 0) return s;
  s.brevity_penalty = s.candidate_length < s.reference_length
                          ? std::exp(1.0 - double(s.reference_length) / double(s.candidate_length))
                          : 1.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (s.matches[n] == 0) return s;
    log_sum += std::log(double(s.matches[n]) / double(s.totals[n]));
  }
  s.score = 100.0 * s.brevity_penalty * std::exp(log_sum / 4.0);
  return s;
}

std::size_t distance_bucket(std::size_t d) {
  if (d <= 3) return d;
  if (d <= 5) return 4;
  if (d <= 10) return 5;
  return 6;
}

std::size_t DistanceHistogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

DistanceHistogram distance_histogram(const std::vector<std::size_t>& distances) {
  DistanceHistogram h;
  for (auto d : distances) ++h.counts[distance_bucket(d)];
  return h;
}

DistanceHistogram edit_distance_table(const std::vector<TokenSeq>& retrieved,
                                      const std::vector<TokenSeq>& ground_truth) {
  check_lengths(retrieved, ground_truth);
  std::vector<std::size_t> d;
  d.reserve(retrieved.size());
  for (std::size_t i = 0; i < retrieved.size(); ++i) d.push_back(edit_distance(retrieved[i], ground_truth[i]));
  return distance_histogram(d);
}

std::map<AssertType, TypeRow> per_type_report(const std::vector<TokenSeq>& predictions,
                                              const std::vector<TokenSeq>& references) {
  check_lengths(predictions, references);
  std::map<AssertType, TypeRow> rows;
  for (std::size_t i = 0; i < references.size(); ++i) {
    auto& row = rows[classify_assertion(references[i])];
    ++row.total;
    row.correct += same(predictions[i], references[i]);
  }
  return rows;
}

EvalReport evaluate(const std::vector<TokenSeq>& predictions,
                    const std::vector<TokenSeq>& references) {
  EvalReport r;
  r.total = references.size();
  r.accuracy = exact_match_accuracy(predictions, references);
  r.bleu = corpus_bleu_stats(predictions, references);
  r.per_type = per_type_report(predictions, references);
  return r;
}

nlohmann::json to_json(const BleuStats& b) {
  return {{"bleu", round2(b.score)},
          {"brevity_penalty", b.brevity_penalty},
          {"matches", b.matches},
          {"totals", b.totals},
          {"candidate_length", b.candidate_length},
          {"reference_length", b.reference_length}};
}

nlohmann::json to_json(const DistanceHistogram& h) {
  nlohmann::json buckets = nlohmann::json::object();
  for (std::size_t i = 0; i < h.counts.size(); ++i) buckets[kDistanceBuckets[i]] = h.counts[i];
  nlohmann::json order = nlohmann::json::array();
  for (auto* name : kDistanceBuckets) order.push_back(name);
  return {{"buckets", buckets}, {"bucket_order", order}, {"total", h.total()}};
}

nlohmann::json to_json(const std::map<AssertType, TypeRow>& rows) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [type, row] : rows) {
    out[std::string(assert_type_name(type))] = {
        {"total", row.total}, {"correct", row.correct}, {"ratio", round2(100.0 * row.ratio())}};
  }
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"total", r.total},
          {"accuracy", round2(r.accuracy)},
          {"bleu", round2(r.bleu.score)},
          {"bleu_detail", to_json(r.bleu)},
          {"per_type", to_json(r.per_type)}};
}

nlohmann::json to_json(const SplitStats& s) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [len, n] : s.length_histogram) hist[std::to_string(len)] = n;
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [type, n] : s.type_counts) types[std::string(assert_type_name(type))] = n;
  return {{"size", s.size}, {"assertion_length_histogram", hist}, {"type_counts", types}};
}

std::string format_table(const EvalReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "total     " << r.total << "\naccuracy  " << r.accuracy << "\nbleu      " << r.bleu.score << "\n\n";
  out << std::left << std::setw(12) << "type" << std::right << std::setw(8) << "total" << std::setw(9)
      << "correct" << std::setw(9) << "ratio" << '\n';
  for (const auto& [type, row] : r.per_type) {
    out << std::left << std::setw(12) << assert_type_name(type) << std::right << std::setw(8) << row.total
        << std::setw(9) << row.correct << std::setw(8) << 100.0 * row.ratio() << "%\n";
  }
  return out.str();
}

std::string format_table(const DistanceHistogram& h) {
  std::ostringstream out;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << std::left << std::setw(8) << kDistanceBuckets[i] << std::right << std::setw(8) << h.counts[i] << '\n';
  }
  out << std::left << std::setw(8) << "total" << std::right << std::setw(8) << h.total() << '\n';
  return out.str();
}

}  // namespace reassert
