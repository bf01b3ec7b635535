#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "pke/common.hpp"
#include "pke/jsonio.hpp"
#include "pke/protocol.hpp"

using namespace pke;

namespace {

ProtocolGraph parse(const std::string& text) {
  std::istringstream in(text);
  return parse_protocol(in);
}

bool has_edge(const ProtocolGraph& g, const std::string& src, const std::string& dst,
              RelationLabel label) {
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const ProtocolEdge& e) {
    return e.src == src && e.dst == dst && e.label == label;
  });
}

}  // namespace

TEST_CASE("parse_protocol links consecutive steps and expands line ranges") {
  ProtocolGraph g = parse("1. prep the patient (lines 8-9)\n2. pass wire (line 14)\n");
  REQUIRE(g.phrases.size() == 2);
  CHECK(g.phrases[0].id == "1");
  CHECK(g.phrases[0].text == "prep the patient");
  CHECK(g.phrases[0].source_lines == std::vector<int>{8, 9});
  CHECK(g.phrases[1].source_lines == std::vector<int>{14});
  REQUIRE(g.edges.size() == 1);
  CHECK(has_edge(g, "1", "2", RelationLabel::Next));
}

TEST_CASE("parse_protocol gives every branch an If edge from its condition") {
  ProtocolGraph g = parse(
      "3. if resistance is felt (line 20):\n"
      "  3a. remove the wire (line 21)\n"
      "  3b. advance (line 22)\n");
  REQUIRE(g.phrases.size() == 3);
  CHECK(g.phrases[0].condition);
  CHECK(has_edge(g, "3", "3a", RelationLabel::If));
  CHECK(has_edge(g, "3", "3b", RelationLabel::If));
  CHECK(!has_edge(g, "3a", "3b", RelationLabel::Next));
}

TEST_CASE("parse_protocol joins control flow after a branch block") {
  ProtocolGraph g = parse(
      "1. flush the line (line 2)\n"
      "2. if resistance is felt (line 4):\n"
      "  2a. stop and reposition (line 5)\n"
      "  2b. withdraw the wire (line 7)\n"
      "3. advance the catheter (line 9)\n");
  CHECK(has_edge(g, "1", "2", RelationLabel::Next));
  CHECK(has_edge(g, "2", "2a", RelationLabel::If));
  CHECK(has_edge(g, "2", "2b", RelationLabel::If));
  // Control flow continues from the tail of the last branch.
  CHECK(has_edge(g, "2b", "3", RelationLabel::Next));
  CHECK(!has_edge(g, "2", "3", RelationLabel::Next));
}

TEST_CASE("parse_protocol rejects malformed input with the offending line") {
  CHECK_THROWS_AS(parse("1. step (lines 9-)\n"), DataError);
  CHECK_THROWS_AS(parse("1. step (line x)\n"), DataError);
  CHECK_THROWS_AS(parse("1. a\n    1a. jumped two levels\n"), DataError);
  CHECK_THROWS_AS(parse("1. plain step:\n  1a. branch under a non-condition\n"),
                  DataError);
  CHECK_THROWS_AS(parse("1. a\n  9z. not an extension of the parent\n"), DataError);
  CHECK_THROWS_AS(parse("1. a\n1. duplicate id\n"), DataError);
}

TEST_CASE("linear protocols produce exactly n-1 Next edges") {
  for (int n = 1; n <= 8; ++n) {
    std::string text;
    for (int i = 1; i <= n; ++i)
      text += std::to_string(i) + ". step number " + std::to_string(i) + " (line " +
              std::to_string(i * 2) + ")\n";
    ProtocolGraph g = parse(text);
    CHECK(g.phrases.size() == static_cast<std::size_t>(n));
    CHECK(g.edges.size() == static_cast<std::size_t>(n - 1));
    for (const ProtocolEdge& e : g.edges) CHECK(e.label == RelationLabel::Next);
  }
}

TEST_CASE("every If edge leaves a condition step") {
  ProtocolGraph g = parse(
      "1. prep (line 1)\n"
      "2. if swelling appears (line 3):\n"
      "  2a. pause the procedure (line 4)\n"
      "  2b. call for help (line 5)\n"
      "3. if resistance is felt (line 7):\n"
      "  3a. pull back (line 8)\n"
      "  3b. rotate gently (line 9)\n"
      "4. close up (line 11)\n");
  for (const ProtocolEdge& e : g.edges) {
    if (e.label != RelationLabel::If) continue;
    const ProtocolPhrase* src = g.phrase(e.src);
    REQUIRE(src != nullptr);
    CHECK(src->condition);
    CHECK(lower_copy(src->text).rfind("if ", 0) == 0);
  }
}

TEST_CASE("parsing is deterministic in canonical serialization") {
  std::string text =
      "1. prep (line 1)\n"
      "2. if swelling appears (line 3):\n"
      "  2a. pause (line 4)\n"
      "  2b. continue (line 5)\n"
      "3. close (line 6)\n";
  std::string a = graph_to_json(parse(text)).dump();
  std::string b = graph_to_json(parse(text)).dump();
  CHECK(a == b);
  ProtocolGraph back = graph_from_json(Json::parse(a));
  CHECK(graph_to_json(back).dump() == a);
}

TEST_CASE("validate_graph reports structural problems without throwing") {
  ProtocolGraph ok = parse("1. a (line 1)\n2. b (line 2)\n3. c (line 3)\n");
  CHECK(validate_graph(ok).empty());

  ProtocolGraph cyc;
  cyc.phrases = {{"1", "a", {1}, false}, {"2", "b", {2}, false}};
  cyc.edges = {{"1", "2", RelationLabel::Next}, {"2", "1", RelationLabel::Next}};
  std::vector<std::string> diags = validate_graph(cyc);
  CHECK(std::any_of(diags.begin(), diags.end(), [](const std::string& d) {
    return d.find("cycle") != std::string::npos;
  }));

  ProtocolGraph dangling;
  dangling.phrases = {{"1", "a", {1}, false}};
  dangling.edges = {{"1", "9", RelationLabel::Next}};
  diags = validate_graph(dangling);
  CHECK(std::any_of(diags.begin(), diags.end(), [](const std::string& d) {
    return d.rfind("error:", 0) == 0;
  }));

  ProtocolGraph unanchored;
  unanchored.phrases = {{"1", "a", {}, false}};
  diags = validate_graph(unanchored);
  CHECK(std::any_of(diags.begin(), diags.end(), [](const std::string& d) {
    return d.find("unanchored") != std::string::npos;
  }));
}
