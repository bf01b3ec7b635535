#include "pke/jsonio.hpp"

#include <fstream>
#include <sstream>

#include "pke/common.hpp"

namespace pke {

const Json& field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field '") + name + "'");
  return *it;
}

int int_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_number_integer()) throw DataError(std::string("field '") + name + "' must be an integer");
  return v.get<int>();
}

std::string str_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_string()) throw DataError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

namespace {

std::vector<std::string> tokens_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_array()) throw DataError(std::string("field '") + name + "' must be an array");
  std::vector<std::string> out;
  for (const Json& t : v) {
    if (!t.is_string()) throw DataError(std::string("field '") + name + "' must hold strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

std::vector<double> doubles_field(const Json& v, const char* name) {
  if (!v.is_array()) throw DataError(std::string("field '") + name + "' must be an array");
  std::vector<double> out;
  for (const Json& t : v) {
    if (!t.is_number()) throw DataError(std::string("field '") + name + "' must hold numbers");
    out.push_back(t.get<double>());
  }
  return out;
}

}  // namespace

std::vector<Json> read_jsonl(std::istream& in, const std::string& what) {
  std::vector<Json> out;
  std::string line;
  int physical = 0;
  while (std::getline(in, line)) {
    ++physical;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw DataError(what + " line " + std::to_string(physical) + ": " + e.what());
    }
  }
  return out;
}

std::string dump_jsonl(const std::vector<Json>& rows) {
  std::string out;
  for (const Json& row : rows) {
    out += row.dump();
    out += '\n';
  }
  return out;
}

Json span_to_json(const TextSpan& s) {
  return Json{{"sent_index", s.sent_index}, {"start", s.start}, {"end", s.end}};
}

TextSpan span_from_json(const Json& j) {
  return TextSpan{int_field(j, "sent_index"), int_field(j, "start"), int_field(j, "end")};
}

Json graph_to_json(const ProtocolGraph& g) {
  Json phrases = Json::array();
  for (const ProtocolPhrase& p : g.phrases) {
    phrases.push_back(Json{{"id", p.id},
                           {"text", p.text},
                           {"condition", p.condition},
                           {"lines", p.source_lines}});
  }
  Json edges = Json::array();
  for (const ProtocolEdge& e : g.edges) {
    edges.push_back(Json::array({e.src, e.dst, relation_name(e.label)}));
  }
  return Json{{"phrases", phrases}, {"edges", edges}};
}

ProtocolGraph graph_from_json(const Json& j) {
  ProtocolGraph g;
  for (const Json& pj : field(j, "phrases")) {
    ProtocolPhrase p;
    p.id = str_field(pj, "id");
    p.text = str_field(pj, "text");
    p.condition = pj.value("condition", false);
    for (const Json& n : field(pj, "lines")) {
      if (!n.is_number_integer()) throw DataError("phrase lines must be integers");
      p.source_lines.push_back(n.get<int>());
    }
    g.phrases.push_back(std::move(p));
  }
  for (const Json& ej : field(j, "edges")) {
    if (!ej.is_array() || ej.size() != 3) {
      throw DataError("edges must be [src, dst, label] triples");
    }
    g.edges.push_back(ProtocolEdge{ej[0].get<std::string>(), ej[1].get<std::string>(),
                                   relation_from_name(ej[2].get<std::string>())});
  }
  return g;
}

Json window_to_json(const ContextWindow& w) {
  auto sentences = [](const std::vector<ContextSentence>& side) {
    Json arr = Json::array();
    for (const ContextSentence& s : side) {
      arr.push_back(Json{{"sent_index", s.sent_index}, {"tokens", s.tokens}});
    }
    return arr;
  };
  return Json{{"doc", w.doc},           {"k", w.k},
              {"span", span_to_json(w.span)}, {"span_tokens", w.span_tokens},
              {"left", sentences(w.left)},    {"right", sentences(w.right)}};
}

ContextWindow window_from_json(const Json& j) {
  ContextWindow w;
  w.doc = str_field(j, "doc");
  w.k = int_field(j, "k");
  w.span = span_from_json(field(j, "span"));
  w.span_tokens = tokens_field(j, "span_tokens");
  auto side = [&](const char* name) {
    std::vector<ContextSentence> out;
    for (const Json& sj : field(j, name)) {
      out.push_back(ContextSentence{int_field(sj, "sent_index"), tokens_field(sj, "tokens")});
    }
    return out;
  };
  w.left = side("left");
  w.right = side("right");
  return w;
}

Json seq_to_json(const SeqExample& ex) {
  return Json{{"doc", ex.doc},
              {"sent_index", ex.sent_index},
              {"tokens", ex.tokens},
              {"tags", ex.tags}};
}

SeqExample seq_from_json(const Json& j) {
  SeqExample ex;
  ex.doc = str_field(j, "doc");
  ex.sent_index = int_field(j, "sent_index");
  ex.tokens = tokens_field(j, "tokens");
  ex.tags = tokens_field(j, "tags");
  if (ex.tags.size() != ex.tokens.size()) {
    throw DataError("sequence example in " + ex.doc + ": |tags| != |tokens|");
  }
  return ex;
}

Json pair_to_json(const PairExample& p) {
  return Json{{"u", window_to_json(p.u)},
              {"v", window_to_json(p.v)},
              {"label", relation_name(p.label)},
              {"u_pos", p.u_positions},
              {"v_pos", p.v_positions}};
}

PairExample pair_from_json(const Json& j) {
  PairExample p;
  p.u = window_from_json(field(j, "u"));
  p.v = window_from_json(field(j, "v"));
  p.label = relation_from_name(str_field(j, "label"));
  for (const Json& n : field(j, "u_pos")) p.u_positions.push_back(n.get<int>());
  for (const Json& n : field(j, "v_pos")) p.v_positions.push_back(n.get<int>());
  return p;
}

std::vector<ReportEntry> make_match_report(const MatchedGraph& m, const Transcript& t) {
  std::vector<ReportEntry> out;
  for (const ProtocolPhrase& p : m.protocol.phrases) {
    ReportEntry e;
    e.phrase_id = p.id;
    e.phrase_text = p.text;
    auto st = m.statuses.find(p.id);
    e.status = st == m.statuses.end() ? MatchStatus::Dropped : st->second;
    auto it = m.matches.find(p.id);
    if (it != m.matches.end()) {
      e.span = it->second.span;
      e.span_text = span_text(t, it->second.span);
      e.score = it->second.score;
    }
    out.push_back(std::move(e));
  }
  return out;
}

Json report_entry_to_json(const ReportEntry& e) {
  Json j{{"phrase_id", e.phrase_id},
         {"phrase_text", e.phrase_text},
         {"status", match_status_name(e.status)},
         {"score", e.score}};
  j["span"] = e.span ? span_to_json(*e.span) : Json(nullptr);
  j["span_text"] = e.span ? Json(e.span_text) : Json(nullptr);
  return j;
}

ReportEntry report_entry_from_json(const Json& j) {
  ReportEntry e;
  e.phrase_id = str_field(j, "phrase_id");
  e.phrase_text = j.value("phrase_text", "");
  e.status = match_status_from_name(str_field(j, "status"));
  e.score = field(j, "score").get<double>();
  const Json& span = field(j, "span");
  if (!span.is_null()) {
    e.span = span_from_json(span);
    const Json& text = field(j, "span_text");
    e.span_text = text.is_null() ? "" : text.get<std::string>();
  }
  return e;
}

std::vector<SpanAnnotation> span_annotations_from_jsonl(std::istream& in) {
  std::vector<SpanAnnotation> out;
  for (const Json& j : read_jsonl(in, "span annotations")) {
    SpanAnnotation a;
    a.phrase_id = str_field(j, "phrase_id");
    const Json& gold = field(j, "gold_span");
    if (!gold.is_null()) a.gold_span = span_from_json(gold);
    a.note = j.value("note", "");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<RelationAnnotation> relation_annotations_from_jsonl(std::istream& in) {
  std::vector<RelationAnnotation> out;
  for (const Json& j : read_jsonl(in, "relation annotations")) {
    RelationAnnotation a;
    a.u_phrase = str_field(j, "u_phrase");
    a.v_phrase = str_field(j, "v_phrase");
    a.label = relation_from_name(str_field(j, "label"));
    out.push_back(std::move(a));
  }
  return out;
}

Json span_annotation_to_json(const SpanAnnotation& a) {
  Json j{{"phrase_id", a.phrase_id}, {"note", a.note}};
  j["gold_span"] = a.gold_span ? span_to_json(*a.gold_span) : Json(nullptr);
  return j;
}

Json relation_annotation_to_json(const RelationAnnotation& a) {
  return Json{{"u_phrase", a.u_phrase}, {"v_phrase", a.v_phrase},
              {"label", relation_name(a.label)}};
}

std::map<std::string, Vector> span_embeddings_from_jsonl(std::istream& in) {
  std::map<std::string, Vector> out;
  for (const Json& j : read_jsonl(in, "span embeddings")) {
    std::string key = str_field(j, "key");
    if (!out.emplace(key, doubles_field(field(j, "vector"), "vector")).second) {
      throw DataError("duplicate span embedding key: " + key);
    }
  }
  return out;
}

Json crf_to_json(const CrfModel& m) {
  Json emission = Json::array();
  for (std::size_t f = 0; f < m.vocab.size(); ++f) {
    Json row = Json::array();
    for (int y = 0; y < m.num_tags; ++y) {
      row.push_back(m.emission[f * static_cast<std::size_t>(m.num_tags) +
                               static_cast<std::size_t>(y)]);
    }
    emission.push_back(std::move(row));
  }
  int w = m.num_tags + 2;
  Json transition = Json::array();
  for (int a = 0; a < w; ++a) {
    Json row = Json::array();
    for (int b = 0; b < w; ++b) {
      row.push_back(m.transition[static_cast<std::size_t>(a * w + b)]);
    }
    transition.push_back(std::move(row));
  }
  Json tags = Json::array();
  for (const char* t : kIobesTags) tags.push_back(t);
  return Json{{"format", "pke-crf"}, {"version", 1},       {"tags", tags},
              {"features", m.vocab.names}, {"emission", emission}, {"transition", transition}};
}

CrfModel crf_from_json(const Json& j) {
  if (j.value("format", "") != "pke-crf") throw DataError("not a sequence model file");
  if (j.value("version", 0) != 1) throw DataError("unsupported sequence model version");
  CrfModel m;
  std::vector<std::string> tags = tokens_field(j, "tags");
  if (tags.size() != kIobesTags.size()) throw DataError("model tagset must be IOBES");
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != kIobesTags[i]) throw DataError("model tagset must be IOBES in order B,I,E,S,O");
  }
  for (const std::string& name : tokens_field(j, "features")) m.vocab.add(name);
  const Json& emission = field(j, "emission");
  if (emission.size() != m.vocab.size()) throw DataError("emission rows != feature count");
  m.emission.reserve(m.vocab.size() * 5);
  for (const Json& row : emission) {
    std::vector<double> vals = doubles_field(row, "emission");
    if (vals.size() != 5) throw DataError("emission rows must have 5 values");
    m.emission.insert(m.emission.end(), vals.begin(), vals.end());
  }
  const Json& transition = field(j, "transition");
  if (transition.size() != 7) throw DataError("transition matrix must be 7x7");
  for (const Json& row : transition) {
    std::vector<double> vals = doubles_field(row, "transition");
    if (vals.size() != 7) throw DataError("transition matrix must be 7x7");
    m.transition.insert(m.transition.end(), vals.begin(), vals.end());
  }
  return m;
}

Json re_to_json(const ReModel& m) {
  Json weights = Json::array();
  for (int f = 0; f <= m.feature_count(); ++f) {
    Json row = Json::array();
    for (int c = 0; c < 3; ++c) {
      row.push_back(m.weights[static_cast<std::size_t>(f * 3 + c)]);
    }
    weights.push_back(std::move(row));
  }
  return Json{{"format", "pke-re"},
              {"version", 1},
              {"labels", Json::array({"none", "next", "if"})},
              {"pooling", pooling_name(m.config.pooling)},
              {"position_buckets", m.config.position_buckets},
              {"position_emb_dim", m.config.position_emb_dim},
              {"k", m.config.k},
              {"dim", m.dim},
              {"feature_names", m.feature_names},
              {"weights", weights}};
}

ReModel re_from_json(const Json& j) {
  if (j.value("format", "") != "pke-re") throw DataError("not a relation model file");
  if (j.value("version", 0) != 1) throw DataError("unsupported relation model version");
  ReModel m;
  m.config.pooling = pooling_from_name(str_field(j, "pooling"));
  m.config.position_buckets = int_field(j, "position_buckets");
  m.config.position_emb_dim = int_field(j, "position_emb_dim");
  m.config.k = int_field(j, "k");
  m.dim = int_field(j, "dim");
  m.feature_names = tokens_field(j, "feature_names");
  const Json& weights = field(j, "weights");
  if (weights.size() != m.feature_names.size() + 1) {
    throw DataError("weight rows must be feature count + 1 (bias)");
  }
  for (const Json& row : weights) {
    std::vector<double> vals = doubles_field(row, "weights");
    if (vals.size() != 3) throw DataError("weight rows must have 3 values");
    m.weights.insert(m.weights.end(), vals.begin(), vals.end());
  }
  return m;
}

Json kg_to_json(const KnowledgeGraph& g) {
  Json nodes = Json::array();
  for (const KgNode& n : g.nodes) {
    nodes.push_back(Json{{"id", n.id}, {"span", span_to_json(n.span)}, {"text", n.text}});
  }
  Json edges = Json::array();
  for (const KgEdge& e : g.edges) {
    edges.push_back(Json{{"src", e.src},
                         {"dst", e.dst},
                         {"label", relation_name(e.label)},
                         {"score", e.score}});
  }
  return Json{{"nodes", nodes}, {"edges", edges}};
}

KnowledgeGraph kg_from_json(const Json& j) {
  KnowledgeGraph g;
  for (const Json& nj : field(j, "nodes")) {
    g.nodes.push_back(KgNode{str_field(nj, "id"), span_from_json(field(nj, "span")),
                             str_field(nj, "text")});
  }
  for (const Json& ej : field(j, "edges")) {
    KgEdge e;
    e.src = str_field(ej, "src");
    e.dst = str_field(ej, "dst");
    e.label = relation_from_name(str_field(ej, "label"));
    e.score = field(ej, "score").get<double>();
    g.edges.push_back(std::move(e));
  }
  return g;
}

void save_json(const std::string& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

Json load_json(const std::string& path) {
  std::string text = slurp_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_crf(const std::string& path, const CrfModel& m) { save_json(path, crf_to_json(m)); }

CrfModel load_crf(const std::string& path) { return crf_from_json(load_json(path)); }

void save_re(const std::string& path, const ReModel& m) { save_json(path, re_to_json(m)); }

ReModel load_re(const std::string& path) { return re_from_json(load_json(path)); }

}  // namespace pke
