#include "pke/pipeline.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "pke/common.hpp"
#include "pke/jsonio.hpp"

namespace pke {

std::vector<TextSpan> run_extract(const Transcript& t, const CrfModel& m) {
  std::vector<TextSpan> out;
  for (const TranscriptLine& line : t.lines) {
    if (line.tokens.empty()) continue;
    std::vector<std::string> tags = viterbi(m, line.tokens);
    for (const auto& [start, end] : extract_spans(tags)) {
      out.push_back(TextSpan{line.sent_index, start, end});
    }
  }
  return out;
}

std::vector<PairPrediction> run_relate(const std::vector<TextSpan>& spans,
                                       const Transcript& t, const ReModel& m,
                                       const EmbeddingTable& emb, int max_distance) {
  std::vector<ContextWindow> windows;
  windows.reserve(spans.size());
  for (const TextSpan& s : spans) windows.push_back(context_window(t, s, m.config.k));
  std::vector<PairPrediction> out;
  int n = static_cast<int>(spans.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      int dist = std::abs(spans[static_cast<std::size_t>(j)].sent_index -
                          spans[static_cast<std::size_t>(i)].sent_index);
      if (max_distance >= 0 && dist > max_distance) continue;
      PairExample p;
      p.u = windows[static_cast<std::size_t>(i)];
      p.v = windows[static_cast<std::size_t>(j)];
      p.u_positions = context_positions(p.u);
      p.v_positions = context_positions(p.v);
      RePrediction pred = re_predict(m, p, emb);
      PairPrediction row;
      row.u = i;
      row.v = j;
      row.label = pred.label;
      row.scores = pred.scores;
      row.score = pred.scores[static_cast<std::size_t>(pred.label)];
      out.push_back(row);
    }
  }
  return out;
}

KnowledgeGraph assemble(const Transcript& t, const std::vector<TextSpan>& spans,
                        const std::vector<PairPrediction>& predictions) {
  KnowledgeGraph g;
  int n = static_cast<int>(spans.size());
  for (int i = 0; i < n; ++i) {
    KgNode node;
    node.id = "n" + std::to_string(i);
    node.span = spans[static_cast<std::size_t>(i)];
    node.text = span_text(t, node.span);
    g.nodes.push_back(std::move(node));
  }
  std::map<std::pair<int, int>, PairPrediction> seen;
  for (const PairPrediction& p : predictions) {
    if (p.u < 0 || p.u >= n || p.v < 0 || p.v >= n || p.u == p.v) {
      throw DataError("assemble: prediction references bad span index");
    }
    if (!seen.emplace(std::make_pair(p.u, p.v), p).second) {
      throw DataError("assemble: duplicate prediction for pair (" + std::to_string(p.u) +
                      "," + std::to_string(p.v) + ")");
    }
  }
  std::map<std::pair<int, int>, const PairPrediction*> winners;
  for (const auto& [key, p] : seen) {
    if (p.label == RelationLabel::None) continue;
    std::pair<int, int> unordered{std::min(p.u, p.v), std::max(p.u, p.v)};
    auto it = winners.find(unordered);
    if (it == winners.end()) {
      winners[unordered] = &p;
    } else if (p.score > it->second->score) {
      // Ties keep the earlier (u < v) direction, which was inserted first
      // thanks to map order.
      winners[unordered] = &p;
    }
  }
  for (const auto& [key, p] : winners) {
    KgEdge e;
    e.src = "n" + std::to_string(p->u);
    e.dst = "n" + std::to_string(p->v);
    e.label = p->label;
    e.score = p->score;
    g.edges.push_back(std::move(e));
  }
  return g;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_graph(const KnowledgeGraph& g, GraphFormat format) {
  if (format == GraphFormat::Json) {
    return kg_to_json(g).dump(2) + "\n";
  }
  std::ostringstream out;
  out << "digraph G {\n";
  if (!g.nodes.empty() || !g.edges.empty()) {
    out << "  rankdir=TB;\n";
    out << "  node [shape=box];\n";
  }
  for (const KgNode& node : g.nodes) {
    out << "  " << node.id << " [label=\"" << dot_escape(node.text) << "\"];\n";
  }
  for (const KgEdge& e : g.edges) {
    out << "  " << e.src << " -> " << e.dst << " [label=\"" << relation_name(e.label)
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace pke
