#ifndef PKE_DATASET_HPP
#define PKE_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pke/corpus.hpp"
#include "pke/matcher.hpp"
#include "pke/protocol.hpp"

namespace pke {

/// One transcript sentence with weak IOBES labels.
struct SeqExample {
  std::string doc;
  int sent_index = 0;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // alphabet {B,I,E,S,O}
};

struct ContextSentence {
  int sent_index = 0;
  std::vector<std::string> tokens;
};

/// A text span plus up to k neighbouring sentences on each side.  The
/// window's token content is exactly: left sentences, the span tokens, right
/// sentences. Tokens of the span's own sentence outside the span are not
/// part of the window, so at k=0 the window equals the span.
struct ContextWindow {
  std::string doc;
  TextSpan span;
  std::vector<std::string> span_tokens;
  int k = 0;
  std::vector<ContextSentence> left;
  std::vector<ContextSentence> right;
};

struct PairExample {
  ContextWindow u;
  ContextWindow v;
  RelationLabel label = RelationLabel::None;
  std::vector<int> u_positions;
  std::vector<int> v_positions;
};

/// ⟨none⟩:⟨next⟩:⟨if⟩ subsampling ratio.
struct SamplingPortion {
  int none_w = 4;
  int next_w = 2;
  int if_w = 1;
};

SamplingPortion portion_from_string(const std::string& s);  // "4:2:1"
std::string portion_to_string(const SamplingPortion& p);

/// IOBES tags for a sentence of sent_len tokens containing the given spans
/// (start,end pairs). Overlapping spans are unioned first; a span out of
/// bounds throws UsageError.
std::vector<std::string> iobes_tags(int sent_len,
                                    std::vector<std::pair<int, int>> spans);

/// True when the sequence is well-formed IOBES.  Kept deliberately
/// independent of iobes_tags (transition table, not shared code) so tests
/// can use it as an oracle.
bool is_valid_iobes(const std::vector<std::string>& tags);

/// One SeqExample per transcript sentence; sentences without matched spans
/// come out all-O.
std::vector<SeqExample> build_seq_dataset(const MatchedGraph& m, const Transcript& t);

/// k sentences of context on each side, clipped at document edges.
ContextWindow context_window(const Transcript& t, const TextSpan& span, int k);

/// Signed sentence distances for the window's sentence units, one value per
/// left/right context sentence plus two values for the span's own sentence:
/// -1 for its part before the span and +1 for the span onward.  Values are
/// clamped to [-10, 10] and never 0.
std::vector<int> context_positions(const ContextWindow& w);

/// Projects protocol edges onto matched spans: each edge with both endpoints
/// matched yields one labeled pair, all remaining ordered span pairs yield
/// ⟨none⟩ pairs. Edges with an unmatched endpoint are counted into
/// *dropped_edges when given.
std::vector<PairExample> build_pair_dataset(const MatchedGraph& m, const Transcript& t,
                                            int k, int* dropped_edges = nullptr);

/// Keep every ⟨if⟩ pair (count m); subsample ⟨next⟩ to floor(m*next_w/if_w)
/// and ⟨none⟩ to floor(m*none_w/if_w) uniformly without replacement.  When a
/// target exceeds the available count, all are kept and a warning is pushed.
/// Output preserves the input order. Deterministic under seed.
std::vector<PairExample> sample_labels(const std::vector<PairExample>& pairs,
                                       const SamplingPortion& portion, std::uint64_t seed,
                                       std::vector<std::string>* warnings = nullptr);

struct DocSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

/// Seeded 80/10/10 split by document id (floor for train/dev, remainder to
/// test). Splitting by document, not by pair, keeps context out of the
/// training fold.
DocSplit split_docs(std::vector<std::string> ids, std::uint64_t seed,
                    double train_frac = 0.8, double dev_frac = 0.1);

}  // namespace pke

#endif
