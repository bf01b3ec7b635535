#ifndef PKE_FIXTURES_HPP
#define PKE_FIXTURES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pke/corpus.hpp"
#include "pke/embeddings.hpp"
#include "pke/metrics.hpp"
#include "pke/protocol.hpp"

namespace pke {

/// Synthetic corpus generator.  Real interview data is private, so every
/// test runs on generated transcripts with planted spans and relations.
///
/// Two families:
///  - "separable": every protocol phrase appears verbatim in its sentence
///    and relations are decodable from span content alone (branch steps
///    carry an in-span "else" marker, conditions start with "if").  Used by
///    the matching and end-to-end checks.
///  - "context": branch spans carry no marker; what separates a branch pair
///    from an ordinary consecutive pair is cue tokens in the *neighbouring*
///    sentences (the condition span's "if" plus one marker word planted in
///    each branch sentence outside its span), so relation accuracy improves
///    only when context windows are wide enough to see them.  Sentences are
///    padded to a fixed length and condition groups sit at least five plain
///    steps apart, which keeps the window signature of every pair type
///    several coordinates away from every differently-labeled one.  Used by
///    the ablation sweep.
///
/// Word vectors are one-hot over the fixture vocabulary: cosine is 1 exactly
/// when two token multisets are proportional, 0 when they share no word.
/// Distractor protocols draw from words that never occur in transcripts.
struct FixtureConfig {
  std::uint64_t seed = 7;
  int docs = 16;
  std::string family = "both";  // separable | context | both
};

struct FixtureDoc {
  std::string name;
  Transcript transcript;
  std::string protocol_text;
  ProtocolGraph protocol;
  std::string distractor_text;  // separable family; empty otherwise
  std::vector<SpanAnnotation> gold_spans;
  std::vector<RelationAnnotation> gold_relations;
};

const std::vector<std::string>& fixture_vocabulary();
std::string fixture_embeddings_text();
EmbeddingTable fixture_embeddings();

std::vector<FixtureDoc> generate_fixture_docs(const std::string& family, int docs,
                                              std::uint64_t seed);

/// Writes one directory per family under out_dir:
///   <family>/corpus/<doc>.transcript.txt, <doc>.protocol.txt
///   <family>/gold/<doc>.spans.jsonl, <doc>.relations.jsonl
///   <family>/distractors/<doc>.protocol.txt   (separable only)
///   <family>/embeddings.txt, <family>/fixtures.json
void make_fixtures(const std::string& out_dir, const FixtureConfig& cfg);

}  // namespace pke

#endif
