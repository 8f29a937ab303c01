#include "reassert/retrieval.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "reassert/error.h"

namespace reassert {
namespace {

constexpr char kIndexMagic[4] = {'R', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw FormatError("truncated index file");
  }
  return v;
}

}  // namespace

std::optional<Coefficient> parse_coefficient(std::string_view name) {
  if (name == "jaccard") return Coefficient::Jaccard;
  if (name == "dice") return Coefficient::Dice;
  if (name == "overlap") return Coefficient::Overlap;
  return std::nullopt;
}

std::string_view coefficient_name(Coefficient c) {
  switch (c) {
    case Coefficient::Jaccard: return "jaccard";
    case Coefficient::Dice: return "dice";
    case Coefficient::Overlap: return "overlap";
  }
  return "?";
}

int compare(const Score& a, const Score& b) {
  // A zero denominator means the value is 0.
  if (a.den == 0 || b.den == 0) {
    bool a_pos = a.den != 0 && a.num != 0;
    bool b_pos = b.den != 0 && b.num != 0;
    return int(a_pos) - int(b_pos);
  }
  unsigned __int128 lhs = (unsigned __int128)a.num * b.den;
  unsigned __int128 rhs = (unsigned __int128)b.num * a.den;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

Score similarity_from_counts(std::size_t inter, std::size_t size_a,
                             std::size_t size_b, Coefficient c) {
  std::uint64_t den = 0;
  switch (c) {
    case Coefficient::Jaccard: den = size_a + size_b - inter; break;
    case Coefficient::Dice: den = size_a + size_b; break;
    case Coefficient::Overlap: den = std::min(size_a, size_b); break;
  }
  if (den == 0) return {0, 0};
  return {inter, den};
}

Score similarity_score(const TokenBag& a, const TokenBag& b, Coefficient c) {
  return similarity_from_counts(a.intersection_size(b), a.size(), b.size(), c);
}

RetrievalIndex::RetrievalIndex(std::vector<IndexEntry> entries, Coefficient c)
    : entries_(std::move(entries)), coefficient_(c) {
  if (entries_.empty()) throw Error("cannot build an index over an empty corpus");
  for (std::uint32_t i = 0; i < entries_.size(); ++i) {
    for (const auto& token : entries_[i].bag.items()) postings_[token].push_back(i);
  }
}

bool RetrievalIndex::better(const Hit& cand, const Hit& best) const {
  int cmp = compare(cand.score, best.score);
  return cmp > 0 || (cmp == 0 && cand.tap_id < best.tap_id);
}

Hit RetrievalIndex::top1_linear(const TokenBag& query,
                                std::optional<std::int64_t> exclude_id) const {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (exclude_id && e.tap_id == *exclude_id) continue;
    Hit cand{e.tap_id, i, similarity_score(query, e.bag, coefficient_)};
    if (!best || better(cand, *best)) best = cand;
  }
  if (!best) throw Error("retrieval failed: every index entry is excluded");
  return *best;
}

Hit RetrievalIndex::top1(const TokenBag& query,
                         std::optional<std::int64_t> exclude_id) const {
  std::vector<std::uint32_t> inter(entries_.size(), 0);
  std::vector<std::uint32_t> touched;
  for (const auto& token : query.items()) {
    auto it = postings_.find(token);
    if (it == postings_.end()) continue;
    for (auto pos : it->second) {
      if (inter[pos]++ == 0) touched.push_back(pos);
    }
  }
  std::optional<Hit> best;
  for (auto pos : touched) {
    const auto& e = entries_[pos];
    if (exclude_id && e.tap_id == *exclude_id) continue;
    Hit cand{e.tap_id, pos,
             similarity_from_counts(inter[pos], query.size(), e.bag.size(),
                                    coefficient_)};
    if (!best || better(cand, *best)) best = cand;
  }
  if (best) return *best;
  // No overlap anywhere: every remaining entry scores 0, lowest id wins.
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (exclude_id && e.tap_id == *exclude_id) continue;
    Hit cand{e.tap_id, i,
             similarity_from_counts(0, query.size(), e.bag.size(), coefficient_)};
    if (!best || cand.tap_id < best->tap_id) best = cand;
  }
  if (!best) throw Error("retrieval failed: every index entry is excluded");
  return *best;
}

void RetrievalIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kIndexMagic, 4);
  put<std::uint32_t>(out, kIndexVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(coefficient_));
  put<std::uint64_t>(out, entries_.size());
  for (const auto& e : entries_) {
    put<std::int64_t>(out, e.tap_id);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.bag.size()));
    for (const auto& token : e.bag.items()) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(token.size()));
      out.write(token.data(), static_cast<std::streamsize>(token.size()));
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

RetrievalIndex RetrievalIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kIndexMagic, 4) != 0) {
    throw FormatError(path.string() + ": not a retrieval index");
  }
  auto version = get<std::uint32_t>(in);
  if (version != kIndexVersion) {
    throw FormatError(path.string() + ": unsupported index version " +
                      std::to_string(version));
  }
  auto coef = get<std::uint8_t>(in);
  if (coef > 2) throw FormatError(path.string() + ": bad coefficient tag");
  auto count = get<std::uint64_t>(in);
  std::vector<IndexEntry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.tap_id = get<std::int64_t>(in);
    auto n = get<std::uint32_t>(in);
    std::vector<std::string> tokens(n);
    for (auto& t : tokens) {
      auto len = get<std::uint32_t>(in);
      t.resize(len);
      if (!in.read(t.data(), len)) throw FormatError("truncated index file");
    }
    e.bag = TokenBag(std::move(tokens));
    entries.push_back(std::move(e));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after index entries");
  }
  return RetrievalIndex(std::move(entries), static_cast<Coefficient>(coef));
}

RetrievalIndex build_index(const std::vector<TAP>& corpus, Coefficient c) {
  if (corpus.empty()) throw Error("cannot build an index over an empty corpus");
  std::vector<IndexEntry> entries;
  entries.reserve(corpus.size());
  for (const auto& tap : corpus) entries.push_back({tap.id, dedup_bag(tap.focal_test)});
  return RetrievalIndex(std::move(entries), c);
}

Retriever::Retriever(const std::vector<TAP>& corpus, RetrievalIndex index)
    : corpus_(&corpus), index_(std::move(index)) {
  for (std::size_t i = 0; i < corpus.size(); ++i) by_id_[corpus[i].id] = i;
  for (const auto& e : index_.entries()) {
    if (!by_id_.contains(e.tap_id)) {
      throw Error("index entry " + std::to_string(e.tap_id) +
                  " has no matching TAP in the corpus");
    }
  }
}

Retriever::Retriever(const std::vector<TAP>& corpus, Coefficient c)
    : Retriever(corpus, build_index(corpus, c)) {}

RetrievalResult Retriever::retrieve_top1(
    const TokenSeq& query_focal_test,
    std::optional<std::int64_t> exclude_id) const {
  Hit hit = index_.top1(dedup_bag(query_focal_test), exclude_id);
  const TAP& tap = (*corpus_)[by_id_.at(hit.tap_id)];
  return {hit.tap_id, hit.score.value(), tap.focal_test, tap.assertion};
}

}  // namespace reassert
