#include <cctype>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pke/common.hpp"
#include "pke/embeddings.hpp"
#include "pke/jsonio.hpp"
#include "pke/pipeline.hpp"

using namespace pke;

namespace {

Transcript make_transcript(const std::vector<std::vector<std::string>>& sentences) {
  Transcript t;
  t.id = "d";
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    TranscriptLine line;
    line.line_no = static_cast<int>(i) + 1;
    line.speaker = "A";
    line.tokens = sentences[i];
    line.sent_index = static_cast<int>(i);
    t.lines.push_back(line);
  }
  return t;
}

/// Tagger that marks exactly the listed words as singleton spans: those words
/// get a large S emission, everything else rides the O-favoring transitions.
CrfModel singleton_word_model(const std::vector<std::string>& words) {
  CrfModel m;
  m.transition.assign(7 * 7, 0.0);
  int O = iobes_index("O");
  m.transition[static_cast<std::size_t>(m.num_tags * 7 + O)] = 4.0;  // START -> O
  m.transition[static_cast<std::size_t>(O * 7 + O)] = 4.0;
  m.transition[static_cast<std::size_t>(O * 7 + m.num_tags + 1)] = 4.0;  // O -> STOP
  for (const std::string& w : words) m.vocab.add("w0=" + lower_copy(w));
  m.emission.assign(m.vocab.size() * 5, 0.0);
  int S = iobes_index("S");
  for (const std::string& w : words) {
    int f = m.vocab.find("w0=" + lower_copy(w));
    m.emission[static_cast<std::size_t>(f * 5 + S)] = 30.0;
  }
  return m;
}

EmbeddingTable tiny_table() {
  std::istringstream in(
      "wire 1 0 0\nstop 0 1 0\nclamp 0 0 1\nflush 1 1 0\nthe 0 0 0\n");
  return load_embeddings(in);
}

ReModel zero_re_model(const EmbeddingTable& emb, int k = 1) {
  ReModel m;
  m.config.k = k;
  m.config.pooling = PoolingMode::MaskedAvg;
  m.dim = emb.dim;
  m.feature_names = pair_feature_names(emb.dim, m.config);
  m.weights.assign(static_cast<std::size_t>(m.feature_count() + 1) * 3, 0.0);
  return m;
}

std::string squeeze(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += c;
  }
  return out;
}

PairPrediction pp(int u, int v, RelationLabel label, double score) {
  PairPrediction p;
  p.u = u;
  p.v = v;
  p.label = label;
  p.score = score;
  return p;
}

}  // namespace

TEST_CASE("extraction over an O-favoring model finds nothing") {
  CrfModel m = singleton_word_model({});
  Transcript t = make_transcript({{"pass", "the", "wire"}, {"stop"}});
  CHECK(run_extract(t, m).empty());
}

TEST_CASE("extraction recovers planted spans in document order") {
  CrfModel m = singleton_word_model({"wire", "stop"});
  Transcript t = make_transcript({{"advance", "the", "wire", "now"}, {"stop", "now"}});
  std::vector<TextSpan> spans = run_extract(t, m);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == TextSpan{0, 2, 3});
  CHECK(spans[1] == TextSpan{1, 0, 1});
}

TEST_CASE("extraction keeps multiple spans in one sentence apart") {
  CrfModel m = singleton_word_model({"clamp", "flush"});
  Transcript t = make_transcript({{"clamp", "here", "then", "flush", "line"}});
  std::vector<TextSpan> spans = run_extract(t, m);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == TextSpan{0, 0, 1});
  CHECK(spans[1] == TextSpan{0, 3, 4});
}

TEST_CASE("relating fewer than two spans yields no pairs") {
  EmbeddingTable emb = tiny_table();
  ReModel m = zero_re_model(emb);
  Transcript t = make_transcript({{"wire", "stop"}});
  CHECK(run_relate({}, t, m, emb).empty());
  CHECK(run_relate({TextSpan{0, 0, 1}}, t, m, emb).empty());
}

TEST_CASE("relating n spans scores every ordered pair") {
  EmbeddingTable emb = tiny_table();
  ReModel m = zero_re_model(emb);
  Transcript t = make_transcript({{"wire"}, {"stop"}, {"clamp"}});
  std::vector<TextSpan> spans = {{0, 0, 1}, {1, 0, 1}, {2, 0, 1}};
  std::vector<PairPrediction> preds = run_relate(spans, t, m, emb);
  CHECK(preds.size() == 6);
  for (const PairPrediction& p : preds) {
    CHECK(p.u != p.v);
    CHECK(p.label == RelationLabel::None);  // zero weights, first label on ties
    CHECK(p.scores[0] + p.scores[1] + p.scores[2] == doctest::Approx(1.0));
    CHECK(p.score == p.scores[static_cast<std::size_t>(p.label)]);
  }
}

TEST_CASE("a distance cap prunes far-apart pairs") {
  EmbeddingTable emb = tiny_table();
  ReModel m = zero_re_model(emb);
  Transcript t = make_transcript({{"wire"}, {"stop"}, {"x"}, {"x"}, {"x"}, {"clamp"}});
  std::vector<TextSpan> spans = {{0, 0, 1}, {1, 0, 1}, {5, 0, 1}};
  CHECK(run_relate(spans, t, m, emb, 1).size() == 2);   // only the adjacent pair
  CHECK(run_relate(spans, t, m, emb, 4).size() == 4);   // plus (1,5) both ways
  CHECK(run_relate(spans, t, m, emb, -1).size() == 6);  // unlimited
}

TEST_CASE("assembling keeps one directed edge per related pair") {
  Transcript t = make_transcript({{"pass", "wire"}, {"check", "flow"}});
  std::vector<TextSpan> spans = {{0, 0, 2}, {1, 0, 2}};
  KnowledgeGraph g = assemble(
      t, spans, {pp(0, 1, RelationLabel::Next, 0.9), pp(1, 0, RelationLabel::None, 0.8)});
  REQUIRE(g.nodes.size() == 2);
  CHECK(g.nodes[0].id == "n0");
  CHECK(g.nodes[0].text == "pass wire");
  CHECK(g.nodes[1].text == "check flow");
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].src == "n0");
  CHECK(g.edges[0].dst == "n1");
  CHECK(g.edges[0].label == RelationLabel::Next);
}

TEST_CASE("conflicting directions keep the higher-scoring edge") {
  Transcript t = make_transcript({{"a"}, {"b"}});
  std::vector<TextSpan> spans = {{0, 0, 1}, {1, 0, 1}};
  KnowledgeGraph g = assemble(
      t, spans, {pp(0, 1, RelationLabel::If, 0.6), pp(1, 0, RelationLabel::If, 0.9)});
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].src == "n1");
  CHECK(g.edges[0].dst == "n0");

  KnowledgeGraph tie = assemble(
      t, spans, {pp(0, 1, RelationLabel::Next, 0.7), pp(1, 0, RelationLabel::Next, 0.7)});
  REQUIRE(tie.edges.size() == 1);
  CHECK(tie.edges[0].src == "n0");  // exact tie resolves to the u < v direction
}

TEST_CASE("all-none predictions assemble a node-only graph") {
  Transcript t = make_transcript({{"a"}, {"b"}});
  std::vector<TextSpan> spans = {{0, 0, 1}, {1, 0, 1}};
  KnowledgeGraph g = assemble(
      t, spans, {pp(0, 1, RelationLabel::None, 0.9), pp(1, 0, RelationLabel::None, 0.9)});
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.empty());
}

TEST_CASE("assembling rejects duplicate and out-of-range pairs") {
  Transcript t = make_transcript({{"a"}, {"b"}});
  std::vector<TextSpan> spans = {{0, 0, 1}, {1, 0, 1}};
  CHECK_THROWS_AS(assemble(t, spans,
                           {pp(0, 1, RelationLabel::Next, 0.9),
                            pp(0, 1, RelationLabel::None, 0.1)}),
                  DataError);
  CHECK_THROWS_AS(assemble(t, spans, {pp(0, 2, RelationLabel::Next, 0.9)}), DataError);
  CHECK_THROWS_AS(assemble(t, spans, {pp(1, 1, RelationLabel::Next, 0.9)}), DataError);
}

TEST_CASE("an empty graph exports as a bare digraph") {
  CHECK(squeeze(export_graph(KnowledgeGraph{}, GraphFormat::Dot)) == "digraph G { }");
}

TEST_CASE("DOT export is deterministic and labels nodes with span text") {
  Transcript t = make_transcript({{"pass", "wire"}, {"if", "bleeding"}, {"hold", "it"}});
  std::vector<TextSpan> spans = {{0, 0, 2}, {1, 0, 2}, {2, 0, 2}};
  KnowledgeGraph g = assemble(t, spans,
                              {pp(0, 1, RelationLabel::If, 0.8),
                               pp(0, 2, RelationLabel::If, 0.7)});
  std::string dot = export_graph(g, GraphFormat::Dot);
  CHECK(dot == export_graph(g, GraphFormat::Dot));
  CHECK(dot.find("n0 [label=\"pass wire\"];") != std::string::npos);
  CHECK(dot.find("n0 -> n1 [label=\"if\"];") != std::string::npos);
  CHECK(dot.find("n0 -> n2 [label=\"if\"];") != std::string::npos);
  CHECK(dot.find("n1 [label=\"if bleeding\"];") < dot.find("n2 [label=\"hold it\"];"));
}

TEST_CASE("DOT export escapes quotes and backslashes in labels") {
  KnowledgeGraph g;
  g.nodes.push_back({"n0", TextSpan{0, 0, 1}, "say \"stop\" \\ wait"});
  std::string dot = export_graph(g, GraphFormat::Dot);
  CHECK(dot.find("[label=\"say \\\"stop\\\" \\\\ wait\"]") != std::string::npos);
}

TEST_CASE("JSON export mirrors the graph exactly") {
  Transcript t = make_transcript({{"a", "b"}, {"c"}});
  std::vector<TextSpan> spans = {{0, 0, 2}, {1, 0, 1}};
  KnowledgeGraph g = assemble(t, spans, {pp(0, 1, RelationLabel::Next, 0.75)});
  Json j = Json::parse(export_graph(g, GraphFormat::Json));
  KnowledgeGraph back = kg_from_json(j);
  REQUIRE(back.nodes.size() == 2);
  REQUIRE(back.edges.size() == 1);
  CHECK(back.nodes[0].id == g.nodes[0].id);
  CHECK(back.nodes[0].span == g.nodes[0].span);
  CHECK(back.nodes[1].text == "c");
  CHECK(back.edges[0].src == "n0");
  CHECK(back.edges[0].label == RelationLabel::Next);
  CHECK(back.edges[0].score == doctest::Approx(0.75));
}

TEST_CASE("sequence and pair examples survive a JSON round trip") {
  SeqExample ex;
  ex.doc = "doc3";
  ex.sent_index = 4;
  ex.tokens = {"pass", "the", "wire"};
  ex.tags = {"B", "I", "E"};
  SeqExample ex2 = seq_from_json(seq_to_json(ex));
  CHECK(ex2.doc == ex.doc);
  CHECK(ex2.sent_index == ex.sent_index);
  CHECK(ex2.tokens == ex.tokens);
  CHECK(ex2.tags == ex.tags);

  PairExample p;
  p.u.doc = "doc3";
  p.u.span = {1, 0, 2};
  p.u.span_tokens = {"pass", "wire"};
  p.u.k = 1;
  p.u.left = {{0, {"ready", "now"}}};
  p.u.right = {{2, {"ok"}}};
  p.v.doc = "doc3";
  p.v.span = {2, 1, 2};
  p.v.span_tokens = {"ok"};
  p.v.k = 1;
  p.label = RelationLabel::If;
  p.u_positions = context_positions(p.u);
  p.v_positions = context_positions(p.v);
  PairExample q = pair_from_json(pair_to_json(p));
  CHECK(q.label == p.label);
  CHECK(q.u.span == p.u.span);
  CHECK(q.u.left.size() == 1);
  CHECK(q.u.left[0].tokens == p.u.left[0].tokens);
  CHECK(q.v.span_tokens == p.v.span_tokens);
  CHECK(q.u_positions == p.u_positions);
  CHECK(q.v_positions == p.v_positions);
  CHECK(pair_to_json(q) == pair_to_json(p));
}

TEST_CASE("model files round trip through disk") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "pke_model_roundtrip";
  fs::create_directories(dir);

  CrfModel m = singleton_word_model({"wire", "stop"});
  std::string crf_path = (dir / "m.crf.json").string();
  save_crf(crf_path, m);
  CrfModel m2 = load_crf(crf_path);
  CHECK(m2.vocab.names == m.vocab.names);
  CHECK(m2.emission == m.emission);
  CHECK(m2.transition == m.transition);
  CHECK(viterbi(m2, {"the", "wire"}) == viterbi(m, {"the", "wire"}));

  EmbeddingTable emb = tiny_table();
  ReModel r = zero_re_model(emb, 2);
  r.weights[5] = 1.25;
  std::string re_path = (dir / "m.re.json").string();
  save_re(re_path, r);
  ReModel r2 = load_re(re_path);
  CHECK(r2.dim == r.dim);
  CHECK(r2.config.k == 2);
  CHECK(pooling_name(r2.config.pooling) == pooling_name(r.config.pooling));
  CHECK(r2.feature_names == r.feature_names);
  CHECK(r2.weights == r.weights);

  CHECK_THROWS_AS(load_crf(re_path), DataError);
  CHECK_THROWS_AS(load_re(crf_path), DataError);
  fs::remove_all(dir);
}
