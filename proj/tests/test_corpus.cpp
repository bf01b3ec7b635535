#include <sstream>

#include "doctest.h"
#include "pke/common.hpp"
#include "pke/corpus.hpp"

using namespace pke;

namespace {

TranscriptLine make_line(int n_tokens) {
  TranscriptLine l;
  for (int i = 0; i < n_tokens; ++i) l.tokens.push_back("t" + std::to_string(i));
  return l;
}

}  // namespace

TEST_CASE("tokenize splits words and detaches punctuation") {
  CHECK(tokenize("pass wire.") == std::vector<std::string>{"pass", "wire", "."});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("Luer-lock it") == std::vector<std::string>{"Luer-lock", "it"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("a,b") == std::vector<std::string>{"a", ",", "b"});
  CHECK(tokenize("-edge case-") == std::vector<std::string>{"-", "edge", "case", "-"});
  CHECK(tokenize("Case KEPT") == std::vector<std::string>{"Case", "KEPT"});
}

TEST_CASE("tokenize is idempotent on space-joined output") {
  Rng rng(41);
  std::vector<std::string> samples = {
      "pass the wire, then flush.", "Luer-lock it (slowly)!", "a-b c'd e.f",
      "3 french dilator -- ready?", "don't. stop'"};
  for (const std::string& s : samples) {
    std::vector<std::string> once = tokenize(s);
    CHECK(tokenize(join_tokens(once)) == once);
  }
}

TEST_CASE("load_transcript parses the numbered line format") {
  std::istringstream in("3: [S] pass wire\n");
  Transcript t = load_transcript(in, "d");
  REQUIRE(t.lines.size() == 1);
  CHECK(t.lines[0].line_no == 3);
  CHECK(t.lines[0].speaker == "S");
  CHECK(t.lines[0].tokens == std::vector<std::string>{"pass", "wire"});
  CHECK(t.lines[0].sent_index == 0);
}

TEST_CASE("load_transcript handles empty input and line gaps") {
  std::istringstream empty("");
  CHECK(load_transcript(empty, "d").lines.empty());

  std::istringstream gaps("2: [S] a\n\n7: [I] b c\n");
  Transcript t = load_transcript(gaps, "d");
  REQUIRE(t.lines.size() == 2);
  CHECK(t.lines[1].line_no == 7);
  CHECK(t.lines[1].sent_index == 1);
  CHECK(t.line_by_no(7) == &t.lines[1]);
  CHECK(t.line_by_no(3) == nullptr);
}

TEST_CASE("load_transcript rejects duplicate and decreasing line numbers") {
  std::istringstream dup("5: [S] a\n5: [S] b\n");
  CHECK_THROWS_AS(load_transcript(dup, "d"), DataError);
  std::istringstream dec("5: [S] a\n4: [S] b\n");
  CHECK_THROWS_AS(load_transcript(dec, "d"), DataError);
  std::istringstream bad("not a transcript line\n");
  CHECK_THROWS_AS(load_transcript(bad, "d"), DataError);
}

TEST_CASE("load_transcript round-trips through render_transcript") {
  std::istringstream in("1: [S] pass the wire.\n4: [I] any resistance?\n9: [S] none, it's smooth\n");
  Transcript t = load_transcript(in, "d");
  std::istringstream again(render_transcript(t));
  Transcript t2 = load_transcript(again, "d");
  REQUIRE(t2.lines.size() == t.lines.size());
  for (std::size_t i = 0; i < t.lines.size(); ++i) {
    CHECK(t2.lines[i].line_no == t.lines[i].line_no);
    CHECK(t2.lines[i].speaker == t.lines[i].speaker);
    CHECK(t2.lines[i].tokens == t.lines[i].tokens);
  }
}

TEST_CASE("enumerate_spans lists spans ordered by (start, end)") {
  CHECK(enumerate_spans(make_line(5), 2, 30).size() == 10);
  CHECK(enumerate_spans(make_line(1), 2, 30).empty());

  std::vector<TextSpan> two = enumerate_spans(make_line(3), 2, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == TextSpan{0, 0, 2});
  CHECK(two[1] == TextSpan{0, 1, 3});
}

TEST_CASE("enumerate_spans count matches the closed form for n <= 40") {
  for (int n = 0; n <= 40; ++n) {
    TranscriptLine line = make_line(n);
    for (auto [lo, hi] : {std::pair{2, 30}, {1, 3}, {2, 2}, {3, 40}}) {
      std::size_t expect = 0;
      for (int len = lo; len <= std::min(hi, n); ++len)
        expect += static_cast<std::size_t>(n - len + 1);
      std::vector<TextSpan> spans = enumerate_spans(line, lo, hi);
      CHECK(spans.size() == expect);
      for (const TextSpan& s : spans) {
        CHECK(s.start >= 0);
        CHECK(s.end <= n);
        CHECK(s.length() >= lo);
        CHECK(s.length() <= hi);
      }
    }
  }
}

TEST_CASE("span_text joins covered tokens and checks bounds") {
  std::istringstream in("1: [S] pass wire .\n");
  Transcript t = load_transcript(in, "d");
  CHECK(span_text(t, {0, 0, 2}) == "pass wire");
  CHECK(span_text(t, {0, 0, 3}) == "pass wire .");
  CHECK_THROWS_AS(span_text(t, {0, 5, 6}), UsageError);
  CHECK_THROWS_AS(span_text(t, {3, 0, 1}), UsageError);
}
