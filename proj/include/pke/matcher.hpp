#ifndef PKE_MATCHER_HPP
#define PKE_MATCHER_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pke/corpus.hpp"
#include "pke/embeddings.hpp"
#include "pke/protocol.hpp"

namespace pke {

enum class SearchScope { SourceLinesOnly, WholeTranscript };

struct MatcherConfig {
  double threshold = 0.5;
  int span_min = 2;
  int span_max = 30;   // span length cap
  SearchScope search_scope = SearchScope::SourceLinesOnly;
  bool parallel = true;  // score candidate spans with the OpenMP kernel
};

enum class MatchMethod { Fuzzy, Exact };

struct MatchResult {
  std::string phrase_id;
  TextSpan span;
  double score = 0.0;
  MatchMethod method = MatchMethod::Fuzzy;
};

enum class MatchStatus { Matched, Dropped, Uninformative };

/// Status labels used in match reports.
const char* match_status_name(MatchStatus s);  // correct-candidate / dropped / uninformative
MatchStatus match_status_from_name(const std::string& s);

struct MatchedGraph {
  std::string doc;
  ProtocolGraph protocol;
  std::map<std::string, MatchResult> matches;  // absent key = dropped phrase
  std::map<std::string, MatchStatus> statuses;
  std::vector<std::string> diagnostics;
};

/// Embedder hook so span vectors can come from a precomputed file instead of
/// the bag-of-words average.  Keys are "phrase:<id>" and
/// "span:<doc>:<sent>:<start>:<end>".  Must be pure: match_protocol may call
/// it from several threads.
using EmbedFn = std::function<PhraseEmbedding(const std::vector<std::string>& tokens,
                                              const std::string& key)>;

EmbedFn table_embedder(const EmbeddingTable& table);

/// Wraps a fallback embedder with a key → vector cache (the precomputed
/// span-embedding JSONL). The cache is copied in.
EmbedFn cached_embedder(std::map<std::string, Vector> cache, EmbedFn fallback);

/// All spans of the scoped sentences with lengths in [span_min, span_max],
/// ordered by (sent_index, start, end).  Unknown line numbers are skipped
/// with a warning pushed to diags.
std::vector<TextSpan> candidate_spans(const Transcript& t, const std::set<int>& scope,
                                      const MatcherConfig& cfg,
                                      std::vector<std::string>* diags = nullptr);

/// Cosine of the phrase vector against every candidate, one score per span.
/// The two variants return bit-identical results; the parallel one fans the
/// spans out over OpenMP threads.
std::vector<double> score_spans_serial(const Vector& phrase_vec,
                                       const std::vector<TextSpan>& spans,
                                       const Transcript& t, const EmbedFn& embed,
                                       const std::string& doc);
std::vector<double> score_spans_parallel(const Vector& phrase_vec,
                                         const std::vector<TextSpan>& spans,
                                         const Transcript& t, const EmbedFn& embed,
                                         const std::string& doc);

struct PhraseMatchOutcome {
  std::optional<MatchResult> result;  // engaged only for Matched
  MatchStatus status = MatchStatus::Dropped;
  double best_score = 0.0;            // best cosine seen, kept even when dropped
  std::vector<std::string> diagnostics;
};

/// Score every candidate span and keep the argmax if it clears the
/// threshold (strict >).  Ties go to the (sent_index, start, end)-smallest
/// span.  A fully out-of-vocabulary phrase, or a scope whose candidates are
/// all out-of-vocabulary, is reported Uninformative.
PhraseMatchOutcome match_phrase_outcome(const ProtocolPhrase& p, const Transcript& t,
                                        const MatcherConfig& cfg, const EmbedFn& embed);

std::optional<MatchResult> match_phrase(const ProtocolPhrase& p, const Transcript& t,
                                        const MatcherConfig& cfg,
                                        const EmbeddingTable& emb);

/// Longest contiguous token run (case-insensitive, length >= 2) shared by
/// the phrase and any scoped sentence.
std::optional<TextSpan> exact_match_baseline(const ProtocolPhrase& p, const Transcript& t,
                                             const std::set<int>& scope);

MatchedGraph match_protocol(const ProtocolGraph& g, const Transcript& t,
                            const MatcherConfig& cfg, const EmbeddingTable& emb);

/// As above with a custom embedder (precomputed span vectors and tests).
MatchedGraph match_protocol(const ProtocolGraph& g, const Transcript& t,
                            const MatcherConfig& cfg, const EmbedFn& embed);

}  // namespace pke

#endif
