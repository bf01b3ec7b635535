#ifndef PKE_JSONIO_HPP
#define PKE_JSONIO_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pke/corpus.hpp"
#include "pke/crf.hpp"
#include "pke/dataset.hpp"
#include "pke/matcher.hpp"
#include "pke/metrics.hpp"
#include "pke/pipeline.hpp"
#include "pke/protocol.hpp"
#include "pke/relation.hpp"

// JSON (de)serialization for every on-disk format.  nlohmann::json keeps
// object keys sorted, so equal values always dump to equal bytes; all files
// written here are LF-terminated and reproducible.

namespace pke {

using Json = nlohmann::json;

/// Parse one JSON document per line, skipping blank lines; parse errors are
/// rethrown as DataError with the 1-based line number.
std::vector<Json> read_jsonl(std::istream& in, const std::string& what);
std::string dump_jsonl(const std::vector<Json>& rows);

/// Checked field access; a missing or mistyped field is a DataError naming it.
const Json& field(const Json& j, const char* name);
int int_field(const Json& j, const char* name);
std::string str_field(const Json& j, const char* name);

Json span_to_json(const TextSpan& s);
TextSpan span_from_json(const Json& j);

Json graph_to_json(const ProtocolGraph& g);
ProtocolGraph graph_from_json(const Json& j);

Json window_to_json(const ContextWindow& w);
ContextWindow window_from_json(const Json& j);

Json seq_to_json(const SeqExample& ex);
SeqExample seq_from_json(const Json& j);

Json pair_to_json(const PairExample& p);
PairExample pair_from_json(const Json& j);

/// Match report rows `{phrase_id, phrase_text, span, span_text, score,
/// status}`; span and span_text are null for non-matched phrases.
std::vector<ReportEntry> make_match_report(const MatchedGraph& m, const Transcript& t);
Json report_entry_to_json(const ReportEntry& e);
ReportEntry report_entry_from_json(const Json& j);

/// Manual annotations: `{phrase_id, gold_span|null, note}` and
/// `{u_phrase, v_phrase, label}` JSONL rows.
std::vector<SpanAnnotation> span_annotations_from_jsonl(std::istream& in);
std::vector<RelationAnnotation> relation_annotations_from_jsonl(std::istream& in);
Json span_annotation_to_json(const SpanAnnotation& a);
Json relation_annotation_to_json(const RelationAnnotation& a);

/// Precomputed span/phrase embeddings: `{key, vector}` JSONL.
std::map<std::string, Vector> span_embeddings_from_jsonl(std::istream& in);

Json crf_to_json(const CrfModel& m);
CrfModel crf_from_json(const Json& j);

Json re_to_json(const ReModel& m);
ReModel re_from_json(const Json& j);

Json kg_to_json(const KnowledgeGraph& g);
KnowledgeGraph kg_from_json(const Json& j);

/// File helpers (atomic writes, format/version checks on load).
void save_json(const std::string& path, const Json& j);
Json load_json(const std::string& path);
void save_crf(const std::string& path, const CrfModel& m);
CrfModel load_crf(const std::string& path);
void save_re(const std::string& path, const ReModel& m);
ReModel load_re(const std::string& path);

}  // namespace pke

#endif
