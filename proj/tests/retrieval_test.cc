#include "reassert/retrieval.h"

#include <fstream>
#include <random>

#include "doctest.h"
#include "reassert/error.h"
#include "support/oracles.h"

using namespace reassert;
using doctest::Approx;

namespace {

TokenBag bag(std::initializer_list<const char*> items) {
  TokenSeq t;
  for (auto* s : items) t.push_back(s);
  return dedup_bag(t);
}

std::vector<IndexEntry> random_entries(std::mt19937_64& rng, std::size_t n, std::size_t alphabet) {
  std::vector<IndexEntry> out;
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::int64_t(i * 3 + 1);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::size_t i = 0; i < n; ++i) out.push_back({ids[i], dedup_bag(testing::random_tokens(rng, 20, alphabet))});
  return out;
}

}  // namespace

TEST_CASE("similarity coefficients") {
  CHECK(similarity(bag({"a", "b"}), bag({"a", "b"}), Coefficient::Jaccard) == 1.0);
  CHECK(similarity(bag({"a", "b"}), bag({"c", "d"}), Coefficient::Jaccard) == 0.0);
  auto x = bag({"a", "b", "c"}), y = bag({"b", "c", "d"});
  CHECK(similarity(x, y, Coefficient::Jaccard) == 0.5);
  CHECK(similarity(x, y, Coefficient::Dice) == Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK(similarity(x, y, Coefficient::Overlap) == Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("empty bags score 0") {
  TokenBag e;
  for (auto c : {Coefficient::Jaccard, Coefficient::Dice, Coefficient::Overlap}) {
    CHECK(similarity(e, e, c) == 0.0);
    CHECK(similarity(e, bag({"a"}), c) == 0.0);
  }
}

TEST_CASE("self similarity") {
  auto a = bag({"x", "y", "z"});
  CHECK(similarity(a, a, Coefficient::Jaccard) == 1.0);
  CHECK(similarity(a, a, Coefficient::Overlap) == 1.0);
  CHECK(similarity(a, a, Coefficient::Dice) == 0.5);
}

TEST_CASE("exact score comparison") {
  CHECK(compare({1, 3}, {2, 6}) == 0);
  CHECK(compare({1, 3}, {1, 2}) < 0);
  CHECK(compare({0, 0}, {0, 5}) == 0);
  CHECK(compare({0, 0}, {1, 5}) < 0);
  CHECK(compare({1, 5}, {0, 0}) > 0);
}

TEST_CASE("coefficient names") {
  CHECK(parse_coefficient("jaccard") == Coefficient::Jaccard);
  CHECK(parse_coefficient("dice") == Coefficient::Dice);
  CHECK(parse_coefficient("overlap") == Coefficient::Overlap);
  CHECK_FALSE(parse_coefficient("cosine"));
  CHECK(coefficient_name(Coefficient::Dice) == "dice");
}

TEST_CASE("property: coefficients are symmetric and Dice = J/(1+J)") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    auto a = dedup_bag(testing::random_tokens(rng, 15, 12));
    auto b = dedup_bag(testing::random_tokens(rng, 15, 12));
    for (auto c : {Coefficient::Jaccard, Coefficient::Dice, Coefficient::Overlap}) {
      CHECK(compare(similarity_score(a, b, c), similarity_score(b, a, c)) == 0);
      CHECK(similarity(a, b, c) == Approx(testing::similarity_brute(a, b, c)).epsilon(1e-12));
      double s = similarity(a, b, c);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    if (a.empty() && b.empty()) continue;
    double j = similarity(a, b, Coefficient::Jaccard);
    CHECK(similarity(a, b, Coefficient::Dice) == Approx(j / (1 + j)).epsilon(1e-12));
  }
}

TEST_CASE("build_index") {
  std::vector<TAP> corpus = {{1, tokenize("a b c"), {"assertTrue"}},
                             {2, tokenize("a b c"), {"assertFalse"}},
                             {3, tokenize("x y"), {"assertNull"}}};
  auto index = build_index(corpus, Coefficient::Dice);
  CHECK(index.size() == 3);
  CHECK(index.coefficient() == Coefficient::Dice);
  CHECK(index.entries()[0].bag == index.entries()[1].bag);
  CHECK_THROWS_AS(build_index({}, Coefficient::Jaccard), Error);
}

TEST_CASE("top1 ties, exclusion and self match") {
  std::vector<TAP> corpus = {{5, tokenize("a b c d"), tokenize("assertTrue(x)")},
                             {2, tokenize("a b c d"), tokenize("assertFalse(x)")},
                             {9, tokenize("a b c"), tokenize("assertNull(x)")},
                             {4, tokenize("q r s"), tokenize("assertSame(x)")}};
  Retriever r(corpus, Coefficient::Jaccard);
  auto hit = r.retrieve_top1(tokenize("a b c d"));
  CHECK(hit.tap_id == 2);
  CHECK(hit.score == 1.0);
  CHECK(hit.retrieved_assertion == tokenize("assertFalse(x)"));
  CHECK(r.retrieve_top1(tokenize("a b c d"), 2).tap_id == 5);
  CHECK(r.retrieve_top1(tokenize("a b c"), 9).tap_id == 2);
  CHECK(r.retrieve_top1(tokenize("zzz")).tap_id == 2);  // all scores 0: lowest id

  std::vector<TAP> one = {{7, {"a"}, {"assertTrue"}}};
  Retriever lone(one, Coefficient::Jaccard);
  CHECK_THROWS_AS(lone.retrieve_top1({"a"}, 7), Error);
}

TEST_CASE("coefficient changes the winner") {
  // Overlap favours a small bag contained in the query.
  std::vector<TAP> corpus = {{1, tokenize("a"), {"assertTrue"}}, {2, tokenize("a b c x y z"), {"assertFalse"}}};
  auto q = tokenize("a b c d e f");
  CHECK(Retriever(corpus, Coefficient::Overlap).retrieve_top1(q).tap_id == 1);
  CHECK(Retriever(corpus, Coefficient::Jaccard).retrieve_top1(q).tap_id == 2);
}

TEST_CASE("property: posting-list top1 agrees with brute force") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    auto entries = random_entries(rng, 1 + rng() % 200, 30);
    for (auto c : {Coefficient::Jaccard, Coefficient::Dice, Coefficient::Overlap}) {
      RetrievalIndex index(entries, c);
      for (int q = 0; q < 10; ++q) {
        auto query = dedup_bag(testing::random_tokens(rng, 20, 30));
        auto hit = index.top1(query);
        CHECK(hit.tap_id == *testing::top1_brute(entries, query, c));
        CHECK(hit.tap_id == index.top1_linear(query).tap_id);
        CHECK(compare(hit.score, similarity_score(index.entries()[hit.position].bag, query, c)) == 0);
        if (entries.size() > 1) {
          auto ex = index.top1(query, hit.tap_id);
          CHECK(ex.tap_id != hit.tap_id);
          CHECK(ex.tap_id == *testing::top1_brute(entries, query, c, hit.tap_id));
        }
      }
    }
  }
}

TEST_CASE("index save and load") {
  std::mt19937_64 rng(2);
  auto entries = random_entries(rng, 50, 40);
  entries.push_back({-3, dedup_bag({"\"a b\"", "ünï"})});
  RetrievalIndex index(entries, Coefficient::Overlap);
  auto dir = testing::scratch_dir("index_io");
  index.save(dir / "x.ridx");
  auto back = RetrievalIndex::load(dir / "x.ridx");
  CHECK(back.coefficient() == Coefficient::Overlap);
  REQUIRE(back.size() == index.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.entries()[i].tap_id == index.entries()[i].tap_id);
    CHECK(back.entries()[i].bag == index.entries()[i].bag);
  }

  std::string bytes;
  {
    std::ifstream in(dir / "x.ridx", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(dir / "bad.ridx", std::ios::binary);
    out << b;
  };
  write("XIDX" + bytes.substr(4));
  CHECK_THROWS_AS(RetrievalIndex::load(dir / "bad.ridx"), FormatError);
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(RetrievalIndex::load(dir / "bad.ridx"), FormatError);
  write(bytes + "x");
  CHECK_THROWS_AS(RetrievalIndex::load(dir / "bad.ridx"), FormatError);
  std::string v = bytes;
  v[4] = 9;
  write(v);
  CHECK_THROWS_AS(RetrievalIndex::load(dir / "bad.ridx"), FormatError);
  CHECK_THROWS_AS(RetrievalIndex::load(dir / "missing.ridx"), Error);
}

TEST_CASE("retriever rejects an index built from another corpus") {
  std::vector<TAP> a = {{1, {"x"}, {"assertTrue"}}};
  std::vector<TAP> b = {{2, {"x"}, {"assertTrue"}}};
  CHECK_THROWS_AS(Retriever(b, build_index(a, Coefficient::Jaccard)), Error);
}
