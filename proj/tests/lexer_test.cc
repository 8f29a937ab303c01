#include "reassert/lexer.h"

#include <random>

#include "doctest.h"
#include "reassert/error.h"

using namespace reassert;

TEST_CASE("call with arguments") {
  CHECK(tokenize("assertEquals(a, b);") ==
        TokenSeq{"assertEquals", "(", "a", ",", "b", ")", ";"});
}

TEST_CASE("maximal munch operators") {
  CHECK(tokenize("x==y") == TokenSeq{"x", "==", "y"});
  CHECK(tokenize("a<=b>=c!=d") == TokenSeq{"a", "<=", "b", ">=", "c", "!=", "d"});
  CHECK(tokenize("i++ + --j") == TokenSeq{"i", "++", "+", "--", "j"});
  CHECK(tokenize("x -> y :: z") == TokenSeq{"x", "->", "y", "::", "z"});
  CHECK(tokenize("a&&b||c") == TokenSeq{"a", "&&", "b", "||", "c"});
  CHECK(tokenize("a+=1;b-=2;c*=3;d/=4") ==
        TokenSeq{"a", "+=", "1", ";", "b", "-=", "2", ";", "c", "*=", "3", ";", "d", "/=", "4"});
  CHECK(tokenize("x>>>2") == TokenSeq{"x", ">>", ">", "2"});
  CHECK(tokenize("1<<3") == TokenSeq{"1", "<<", "3"});
  CHECK(tokenize("a%=b") == TokenSeq{"a", "%", "=", "b"});
}

TEST_CASE("string literal is one token") {
  CHECK(tokenize("s = \"a b\";") == TokenSeq{"s", "=", "\"a b\"", ";"});
  CHECK(tokenize(R"(f("say \"hi\"", 'x', '\''))") ==
        TokenSeq{"f", "(", R"("say \"hi\"")", ",", "'x'", ",", R"('\'')", ")"});
  CHECK(tokenize("\"\"") == TokenSeq{"\"\""});
}

TEST_CASE("text block") {
  CHECK(tokenize("s = \"\"\"\nline \" one\n\"\"\";") ==
        TokenSeq{"s", "=", "\"\"\"\nline \" one\n\"\"\"", ";"});
}

TEST_CASE("numeric literals") {
  CHECK(tokenize("0xFFL 0b101 42 3.14 1e10 2.5e-3f 7d .5 10L") ==
        TokenSeq{"0xFFL", "0b101", "42", "3.14", "1e10", "2.5e-3f", "7d", ".5", "10L"});
  CHECK(tokenize("a.b(1.0)") == TokenSeq{"a", ".", "b", "(", "1.0", ")"});
}

TEST_CASE("identifiers") {
  CHECK(tokenize("$x _y z9 café") == TokenSeq{"$x", "_y", "z9", "café"});
  CHECK(tokenize("getFooBar") == TokenSeq{"getFooBar"});
  CHECK(tokenize("@Test public") == TokenSeq{"@", "Test", "public"});
}

TEST_CASE("comments and whitespace dropped") {
  CHECK(tokenize("a // tail\n b /* block\n */ c") == TokenSeq{"a", "b", "c"});
  CHECK(tokenize("a /* never closed") == TokenSeq{"a"});
  CHECK(tokenize("   \t\r\n ").empty());
  CHECK(tokenize("").empty());
  CHECK(tokenize("a/b") == TokenSeq{"a", "/", "b"});
}

TEST_CASE("unknown characters become single tokens") {
  CHECK(tokenize("a#b`c") == TokenSeq{"a", "#", "b", "`", "c"});
}

TEST_CASE("unterminated literals report the byte offset") {
  try {
    tokenize("s = \"abc");
    FAIL("expected LexError");
  } catch (const LexError& e) {
    CHECK(e.offset() == 4);
  }
  try {
    tokenize("x\n'a\n'");
    FAIL("expected LexError");
  } catch (const LexError& e) {
    CHECK(e.offset() == 2);
  }
  CHECK_THROWS_AS(tokenize("\"\"\" open"), LexError);
}

TEST_CASE("dedup_bag") {
  CHECK(dedup_bag({"a", "b", "a"}).items() == std::vector<std::string>{"a", "b"});
  CHECK(dedup_bag({}).empty());
  CHECK(dedup_bag({"(", "(", "("}).items() == std::vector<std::string>{"("});
  TokenBag x = dedup_bag({"c", "a", "b"}), y = dedup_bag({"b", "d", "c"});
  CHECK(x.intersection_size(y) == 2);
  CHECK(x.contains("a"));
  CHECK_FALSE(x.contains("d"));
}

TEST_CASE("join and whitespace split") {
  CHECK(join_tokens({"a", "(", "b", ")"}) == "a ( b )");
  CHECK(join_tokens({}).empty());
  CHECK(split_whitespace("  assertTrue ( x )\t") == TokenSeq{"assertTrue", "(", "x", ")"});
}

namespace {

std::string random_source(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "foo", "Bar1", "_x", "$", "42", "0x1F", "3.5e2", "\"s t\"", "'c'", "==", "=", "<", "<=",
      ">>", ">", "+", "++", "-", "->", ":", "::", "(", ")", "{", "}", ";", ",", ".", "/",
      "*", "&", "&&", "|", "!", " ", "  ", "\n", "\t", "// note\n", "/* c */", "@", "#"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), len(0, 40);
  std::string s;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) s += pieces[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("property: relexing joined tokens is idempotent") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    auto src = random_source(rng);
    TokenSeq t;
    try {
      t = tokenize(src);
    } catch (const LexError&) {
      continue;
    }
    CAPTURE(src);
    CHECK(tokenize(join_tokens(t)) == t);
    CHECK(dedup_bag(t).size() <= t.size());
    for (const auto& tok : t) {
      REQUIRE_FALSE(tok.empty());
      CHECK(tok.rfind("//", 0) != 0);
      CHECK(tok.rfind("/*", 0) != 0);
      bool literal = tok.front() == '"' || tok.front() == '\'';
      if (!literal) CHECK(tok.find_first_of(" \t\r\n") == std::string::npos);
    }
  }
}
