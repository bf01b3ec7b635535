#ifndef PKE_PIPELINE_HPP
#define PKE_PIPELINE_HPP

#include <array>
#include <string>
#include <vector>

#include "pke/corpus.hpp"
#include "pke/crf.hpp"
#include "pke/protocol.hpp"
#include "pke/relation.hpp"

namespace pke {

struct KgNode {
  std::string id;  // "n0", "n1", ... in document order
  TextSpan span;
  std::string text;
};

struct KgEdge {
  std::string src;
  std::string dst;
  RelationLabel label = RelationLabel::None;  // stored edges are never None
  double score = 0.0;
};

struct KnowledgeGraph {
  std::vector<KgNode> nodes;
  std::vector<KgEdge> edges;
};

/// Viterbi-decode every sentence and collect the spans in document order.
std::vector<TextSpan> run_extract(const Transcript& t, const CrfModel& m);

struct PairPrediction {
  int u = 0;  // indices into the span list
  int v = 0;
  RelationLabel label = RelationLabel::None;
  double score = 0.0;  // probability of the predicted label
  std::array<double, 3> scores{};
};

/// Classify every ordered span pair (optionally only those within
/// max_distance sentences; max_distance < 0 means no limit).
std::vector<PairPrediction> run_relate(const std::vector<TextSpan>& spans,
                                       const Transcript& t, const ReModel& m,
                                       const EmbeddingTable& emb, int max_distance = -1);

/// Build the graph: one node per span, one edge per non-None prediction.
/// When both orderings of a pair are non-None, the higher-score edge wins
/// (the (u<v) one on an exact tie). Duplicate pair predictions are a data
/// error.
KnowledgeGraph assemble(const Transcript& t, const std::vector<TextSpan>& spans,
                        const std::vector<PairPrediction>& predictions);

enum class GraphFormat { Dot, Json };

/// DOT digraph with span text as node labels (deterministic node order), or
/// the JSON mirror of the struct.
std::string export_graph(const KnowledgeGraph& g, GraphFormat format);

}  // namespace pke

#endif
