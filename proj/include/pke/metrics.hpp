#ifndef PKE_METRICS_HPP
#define PKE_METRICS_HPP

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pke/corpus.hpp"
#include "pke/matcher.hpp"
#include "pke/protocol.hpp"

namespace pke {

/// Sentence-macro token metrics: every sentence contributes equally to the
/// averages regardless of its length.
struct TokenMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // binary non-O vs O, macro-averaged
  double micro_accuracy = 0.0;
  std::vector<double> per_sentence_accuracy;
  std::vector<double> per_sentence_f1;
};

/// Per-sentence accuracy and binary (non-O vs O) F1, averaged unweighted
/// over sentences.  A sentence with no non-O tokens in either gold or pred
/// counts as F1 = 1. Misaligned inputs throw DataError naming the sentence.
TokenMetrics token_metrics(const std::vector<std::vector<std::string>>& gold,
                           const std::vector<std::vector<std::string>>& pred);

struct MentionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;  // fraction of gold mentions exactly recovered
  int gold_count = 0;
  int pred_count = 0;
  int hits = 0;
};

/// Exact-boundary set comparison; duplicates in either list are collapsed.
MentionMetrics mention_metrics(const std::vector<TextSpan>& gold,
                               const std::vector<TextSpan>& pred);

/// P/R/F1/accuracy from raw counts (used when hits are established by some
/// other pairing rule, e.g. per-phrase overlap credit).
MentionMetrics mention_metrics_from_counts(int hits, int gold_count, int pred_count);

struct RelationMetrics {
  double accuracy = 0.0;
  double micro_f1 = 0.0;  // over Next and If unless include_none is set
  double next_f1 = 0.0;
  double if_f1 = 0.0;
  std::array<std::array<int, 3>, 3> confusion{};  // [gold][pred], label order None,Next,If
};

RelationMetrics relation_metrics(const std::vector<RelationLabel>& gold,
                                 const std::vector<RelationLabel>& pred,
                                 bool include_none = false);

/// Mean and sample standard deviation (n-1 denominator, 0 when n = 1).
std::pair<double, double> aggregate_runs(const std::vector<double>& runs);

/// Manual annotation records: one gold span (or an explicit unmatchable
/// marker) per phrase and gold labels for phrase pairs.
struct SpanAnnotation {
  std::string phrase_id;
  std::optional<TextSpan> gold_span;  // empty = noisy/unmatchable phrase
  std::string note;
};

struct RelationAnnotation {
  std::string u_phrase;
  std::string v_phrase;
  RelationLabel label = RelationLabel::None;
};

struct ManualAnnotation {
  std::vector<SpanAnnotation> spans;
  std::vector<RelationAnnotation> relations;
};

/// One row of a match report (see jsonio for the file format).
struct ReportEntry {
  std::string phrase_id;
  std::string phrase_text;
  std::optional<TextSpan> span;
  std::string span_text;
  double score = 0.0;
  MatchStatus status = MatchStatus::Dropped;
};

struct MatchingEval {
  MentionMetrics exact;    // exact-boundary per-phrase scoring
  MentionMetrics overlap;  // diagnostic: credit when spans share a token
  TokenMetrics token;      // over induced per-sentence tags
  int phrases_scored = 0;
  int noisy_gold = 0;  // annotations marked unmatchable
};

/// Scores a match report against manual span annotations.  Every annotation
/// phrase id must be unique; report entries for unknown ids are an error.
MatchingEval evaluate_matching(const Transcript& t,
                               const std::vector<SpanAnnotation>& annotations,
                               const std::vector<ReportEntry>& report);

}  // namespace pke

#endif
