#include "pke/fixtures.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <utility>

#include "pke/common.hpp"
#include "pke/jsonio.hpp"

namespace pke {
namespace {

const std::vector<std::string>& verb_words() {
  static const std::vector<std::string> v = {"insert",  "advance", "remove",
                                             "flush",   "secure",  "check",
                                             "rotate",  "clamp",   "inflate",
                                             "withdraw"};
  return v;
}

const std::vector<std::string>& object_words() {
  static const std::vector<std::string> v = {"wire",   "catheter", "needle",
                                             "dilator", "syringe", "port",
                                             "sheath", "valve",    "tubing",
                                             "stopcock"};
  return v;
}

const std::vector<std::string>& condition_nouns() {
  static const std::vector<std::string> v = {"resistance", "bleeding", "swelling",
                                             "kinking",    "backflow", "ectopy"};
  return v;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> v = {"um",   "uh",   "you",  "know",
                                             "so",   "then", "okay", "well",
                                             "just", "now",  "right", "yeah"};
  return v;
}

/// Pool for distractor phrases. Invented non-words, so none can occur in a
/// transcript. 45 entries cover the worst case of a separable plan (8 top
/// steps + 6 branch steps, 3 words each = 42) when dealt without replacement.
const std::vector<std::string>& distractor_words() {
  static const std::vector<std::string> v = {
      "zorp",   "flib",   "quux",    "blat",  "grue",   "snark",  "vexel",
      "plonk",  "trag",   "womp",    "skree", "dulp",   "norg",   "hest",
      "crindle", "vop",   "smeck",   "torl",  "ablix",  "fenk",   "grotch",
      "yimble", "prand",  "sker",    "ulvane", "dreep", "moxat",  "cabril",
      "twonk",  "ezzle",  "frin",    "gompt", "hilver", "jarx",   "klubb",
      "norv",   "plix",   "quenth",  "razzle", "snib",  "taddle", "vurm",
      "wexo",   "yarp",   "zindle"};
  return v;
}

constexpr const char* kConditionCue = "if";    // first token of condition spans
constexpr const char* kBranchMarker = "else";  // in-span marker, separable family
// Out-of-span markers, context family: one per branch sentence. Distinct
// tokens per branch position keep the window signatures of unrelated pairs
// several coordinates away from the related ones, which a linear model needs.
constexpr const char* kFirstBranchCue = "flag";
constexpr const char* kSecondBranchCue = "fork";

/// One planned transcript sentence. start/end give the planted span, or
/// start == -1 for filler sentences.
struct SentencePlan {
  std::vector<std::string> tokens;
  std::string phrase_id;  // empty for filler sentences
  int start = -1;
  int end = -1;
};

/// One protocol step; branches are non-empty exactly for conditions.
struct StepPlan {
  std::string id;
  std::vector<std::string> phrase;
  bool condition = false;
  std::vector<StepPlan> branches;
};

struct DocPlan {
  std::vector<StepPlan> steps;
  std::vector<SentencePlan> sentences;
};

std::vector<std::string> filler_sentence(Rng& rng, int min_len, int spread) {
  int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(spread) + 1));
  std::vector<std::string> out;
  for (int i = 0; i < len; ++i) out.push_back(rng.pick(filler_words()));
  return out;
}

/// uniform_len pads every sentence to exactly five tokens. Fixed sentence
/// lengths keep every context window at the same token count, so a pooled
/// one-hot fraction takes one of two values (absent, or one count over the
/// window size) instead of drifting with how talkative a line happens to be.
SentencePlan phrase_sentence(Rng& rng, const StepPlan& step, bool uniform_len,
                             const char* marker) {
  SentencePlan s;
  int span_len = static_cast<int>(step.phrase.size());
  int budget = uniform_len ? 5 - span_len - (marker ? 1 : 0)
                           : 2;
  int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(budget) + 1));
  for (int i = 0; i < left; ++i) s.tokens.push_back(rng.pick(filler_words()));
  s.start = static_cast<int>(s.tokens.size());
  for (const auto& w : step.phrase) s.tokens.push_back(w);
  s.end = static_cast<int>(s.tokens.size());
  s.phrase_id = step.id;
  if (marker) s.tokens.push_back(marker);
  if (uniform_len) {
    while (static_cast<int>(s.tokens.size()) < 5)
      s.tokens.push_back(rng.pick(filler_words()));
  } else {
    int right = static_cast<int>(rng.below(2));
    for (int i = 0; i < right; ++i) s.tokens.push_back(rng.pick(filler_words()));
  }
  return s;
}

/// Verb-object pairs dealt without replacement so no two phrases of a
/// document share a full token multiset (keeps the verbatim span the unique
/// cosine-1 candidate).
class ComboDeck {
 public:
  explicit ComboDeck(Rng& rng) {
    for (const auto& v : verb_words())
      for (const auto& o : object_words()) combos_.push_back({v, o});
    rng.shuffle(combos_);
  }

  std::vector<std::string> deal() {
    if (next_ >= combos_.size()) throw UsageError("fixture deck exhausted");
    const auto& c = combos_[next_++];
    return {c.first, c.second};
  }

 private:
  std::vector<std::pair<std::string, std::string>> combos_;
  std::size_t next_ = 0;
};

std::string step_label(int n) { return std::to_string(n); }

/// Plans the protocol steps of one document.
///
/// separable: flat list of steps, ~1/3 conditions (at least one), branch
/// phrases open with the in-span "else" marker.
///
/// context: branch phrases are plain verb-object spans, so the label of a
/// pair is not readable from the spans alone. Condition groups (condition
/// plus two branches) are separated by at least five plain steps; any closer
/// and a window at radius two could see cue tokens of two different groups
/// at once, which makes some unrelated pairs indistinguishable from related
/// ones under one shared set of classifier weights.
std::vector<StepPlan> plan_steps(Rng& rng, const std::string& family) {
  ComboDeck deck(rng);
  std::vector<std::string> nouns = condition_nouns();
  rng.shuffle(nouns);
  std::size_t noun_next = 0;

  auto make_plain = [&](const std::string& id) {
    StepPlan s;
    s.id = id;
    s.phrase = deck.deal();
    return s;
  };
  auto make_condition = [&](const std::string& id, bool marked_branches) {
    StepPlan s;
    s.id = id;
    s.condition = true;
    s.phrase = {kConditionCue, nouns[noun_next++]};
    for (int b = 0; b < 2; ++b) {
      StepPlan br;
      br.id = id + (b == 0 ? "a" : "b");
      br.phrase = deck.deal();
      if (marked_branches) br.phrase.insert(br.phrase.begin(), kBranchMarker);
      s.branches.push_back(std::move(br));
    }
    return s;
  };

  std::vector<StepPlan> steps;
  if (family == "separable") {
    int n_top = 5 + static_cast<int>(rng.below(4));
    int conds = 0;
    for (int i = 0; i < n_top; ++i) {
      std::string id = step_label(i + 1);
      bool want_cond = (i == 1) || (rng.below(100) < 35 && conds < 3);
      if (want_cond && noun_next < nouns.size()) {
        steps.push_back(make_condition(id, true));
        ++conds;
      } else {
        steps.push_back(make_plain(id));
      }
    }
  } else {
    int next_id = 1;
    auto plain_run = [&](int n) {
      for (int i = 0; i < n; ++i) steps.push_back(make_plain(step_label(next_id++)));
    };
    int groups = 2 + static_cast<int>(rng.below(2));
    plain_run(1 + static_cast<int>(rng.below(2)));
    for (int g = 0; g < groups; ++g) {
      steps.push_back(make_condition(step_label(next_id++), false));
      if (g + 1 < groups) plain_run(5 + static_cast<int>(rng.below(2)));
    }
    plain_run(1 + static_cast<int>(rng.below(2)));
  }
  return steps;
}

/// Lays the steps out one sentence apiece, in protocol order, with filler
/// sentences fore and aft. In the context family the second branch sentence
/// carries the marker token outside its span: a span's own window never sees
/// its host sentence beyond the span, so the marker is invisible to the
/// second branch itself but visible to every neighbour within the radius.
std::vector<SentencePlan> plan_sentences(Rng& rng, const std::vector<StepPlan>& steps,
                                         const std::string& family) {
  bool context = family == "context";
  std::vector<SentencePlan> out;
  auto filler = [&]() {
    SentencePlan f;
    f.tokens = context ? filler_sentence(rng, 5, 0) : filler_sentence(rng, 3, 3);
    out.push_back(std::move(f));
  };
  int preamble = context ? 3 : 1 + static_cast<int>(rng.below(2));
  for (int i = 0; i < preamble; ++i) filler();
  for (const auto& step : steps) {
    out.push_back(phrase_sentence(rng, step, context, nullptr));
    for (std::size_t b = 0; b < step.branches.size(); ++b) {
      const char* marker =
          context ? (b == 0 ? kFirstBranchCue : kSecondBranchCue) : nullptr;
      out.push_back(phrase_sentence(rng, step.branches[b], context, marker));
    }
  }
  int postamble = context ? 3 : 1;
  for (int i = 0; i < postamble; ++i) filler();
  return out;
}

Transcript build_transcript(Rng& rng, const std::string& name,
                            std::vector<SentencePlan>& sentences) {
  Transcript t;
  t.id = name;
  int line_no = 1 + static_cast<int>(rng.below(3));
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    TranscriptLine line;
    line.line_no = line_no;
    line.sent_index = static_cast<int>(i);
    line.speaker = sentences[i].phrase_id.empty()
                       ? std::string(rng.below(2) == 0 ? "INT" : "RN")
                       : std::string("SME");
    line.tokens = sentences[i].tokens;
    t.lines.push_back(std::move(line));
    line_no += 1;
    if (rng.below(5) == 0) line_no += 1 + static_cast<int>(rng.below(2));
  }
  return t;
}

/// Writes "(line N)" or occasionally "(lines A-B)"; widened ranges stay safe
/// because no two phrases of a document share a two-token run, and a line
/// number that falls into a numbering gap only exercises the skip path.
std::string annotation_for(Rng& rng, const Transcript& t, int sent_index) {
  int host = t.lines[static_cast<std::size_t>(sent_index)].line_no;
  std::uint64_t r = rng.below(100);
  if (r < 20 && sent_index > 0) {
    int prev = t.lines[static_cast<std::size_t>(sent_index) - 1].line_no;
    char buf[48];
    std::snprintf(buf, sizeof buf, "(lines %d-%d)", prev, host);
    return buf;
  }
  if (r < 32) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "(lines %d-%d)", host, host + 1);
    return buf;
  }
  return "(line " + std::to_string(host) + ")";
}

void render_step(std::ostringstream& out, const StepPlan& step, int depth,
                 const std::string& annotation,
                 const std::vector<std::pair<std::string, std::string>>& branch_annotations) {
  for (int i = 0; i < depth; ++i) out << "  ";
  out << step.id << ". " << join_tokens(step.phrase);
  if (!annotation.empty()) out << " " << annotation;
  if (step.condition) out << ":";
  out << "\n";
  for (const auto& br : step.branches) {
    std::string ann;
    for (const auto& [id, a] : branch_annotations)
      if (id == br.id) ann = a;
    render_step(out, br, depth + 1, ann, branch_annotations);
  }
}

void collect_steps(const std::vector<StepPlan>& steps,
                   std::vector<const StepPlan*>& out) {
  for (const auto& s : steps) {
    out.push_back(&s);
    collect_steps(s.branches, out);
  }
}

/// Distractor protocol: a flat renumbered list with one plain step per
/// original phrase, branch phrases included. Each line keeps the annotation
/// of the phrase it replaces, so matching scopes stay put. Phrases are dealt
/// three words each from one shuffled pool without replacement: they share no
/// word with any transcript and no word with each other, so every candidate
/// span and every other distractor phrase scores cosine exactly 0.
std::string distractor_protocol(
    const std::vector<StepPlan>& steps, Rng& rng,
    const std::vector<std::pair<std::string, std::string>>& annotations) {
  std::vector<const StepPlan*> flat;
  collect_steps(steps, flat);
  std::vector<std::string> pool = distractor_words();
  rng.shuffle(pool);
  std::ostringstream out;
  std::size_t next_word = 0;
  int next_id = 1;
  for (const StepPlan* s : flat) {
    out << next_id++ << ".";
    for (int w = 0; w < 3; ++w) out << " " << pool[next_word++];
    for (const auto& [id, ann] : annotations)
      if (id == s->id && !ann.empty()) out << " " << ann;
    out << "\n";
  }
  return out.str();
}

FixtureDoc build_doc(const std::string& family, const std::string& name, Rng& rng) {
  FixtureDoc doc;
  doc.name = name;

  std::vector<StepPlan> steps = plan_steps(rng, family);
  std::vector<SentencePlan> sentences = plan_sentences(rng, steps, family);
  doc.transcript = build_transcript(rng, name, sentences);

  // Map each phrase id to its sentence and annotation.
  std::vector<std::pair<std::string, std::string>> annotations;  // id -> "(line N)"
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (s.phrase_id.empty()) continue;
    SpanAnnotation gold;
    gold.phrase_id = s.phrase_id;
    gold.gold_span = TextSpan{static_cast<int>(i), s.start, s.end};
    doc.gold_spans.push_back(std::move(gold));
    annotations.emplace_back(s.phrase_id,
                             annotation_for(rng, doc.transcript, static_cast<int>(i)));
  }

  auto annotation_of = [&](const std::string& id) {
    for (const auto& [aid, a] : annotations)
      if (aid == id) return a;
    return std::string();
  };

  std::ostringstream proto;
  for (const auto& step : steps)
    render_step(proto, step, 0, annotation_of(step.id), annotations);
  doc.protocol_text = proto.str();

  std::istringstream in(doc.protocol_text);
  doc.protocol = parse_protocol(in);
  for (const auto& e : doc.protocol.edges) {
    doc.gold_relations.push_back({e.src, e.dst, e.label});
  }

  if (family == "separable") {
    doc.distractor_text = distractor_protocol(steps, rng, annotations);
  }
  return doc;
}

}  // namespace

const std::vector<std::string>& fixture_vocabulary() {
  static const std::vector<std::string> vocab = [] {
    std::vector<std::string> v;
    auto add = [&](const std::vector<std::string>& ws) {
      v.insert(v.end(), ws.begin(), ws.end());
    };
    add(verb_words());
    add(object_words());
    add(condition_nouns());
    add(filler_words());
    add(distractor_words());
    v.push_back(kConditionCue);
    v.push_back(kBranchMarker);
    v.push_back(kFirstBranchCue);
    v.push_back(kSecondBranchCue);
    return v;
  }();
  return vocab;
}

std::string fixture_embeddings_text() {
  const auto& vocab = fixture_vocabulary();
  std::ostringstream out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab[i];
    for (std::size_t j = 0; j < vocab.size(); ++j) out << (i == j ? " 1" : " 0");
    out << "\n";
  }
  return out.str();
}

EmbeddingTable fixture_embeddings() {
  std::istringstream in(fixture_embeddings_text());
  return load_embeddings(in);
}

std::vector<FixtureDoc> generate_fixture_docs(const std::string& family, int docs,
                                              std::uint64_t seed) {
  if (family != "separable" && family != "context")
    throw UsageError("unknown fixture family: " + family);
  if (docs <= 0) throw UsageError("fixture doc count must be positive");
  std::vector<FixtureDoc> out;
  for (int i = 0; i < docs; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "doc%02d", i);
    Rng rng(seed * 1000003 + static_cast<std::uint64_t>(i) +
            (family == "context" ? 500009 : 0));
    out.push_back(build_doc(family, name, rng));
  }
  return out;
}

void make_fixtures(const std::string& out_dir, const FixtureConfig& cfg) {
  std::vector<std::string> families;
  if (cfg.family == "both") {
    families = {"separable", "context"};
  } else {
    families = {cfg.family};
  }
  namespace fs = std::filesystem;
  for (const auto& family : families) {
    fs::path root = fs::path(out_dir) / family;
    fs::create_directories(root / "corpus");
    fs::create_directories(root / "gold");
    if (family == "separable") fs::create_directories(root / "distractors");

    auto docs = generate_fixture_docs(family, cfg.docs, cfg.seed);
    Json manifest;
    manifest["family"] = family;
    manifest["seed"] = cfg.seed;
    manifest["embedding_dim"] = fixture_vocabulary().size();
    manifest["docs"] = Json::array();
    for (const auto& doc : docs) {
      manifest["docs"].push_back(doc.name);
      write_file_atomic((root / "corpus" / (doc.name + ".transcript.txt")).string(),
                        render_transcript(doc.transcript));
      write_file_atomic((root / "corpus" / (doc.name + ".protocol.txt")).string(),
                        doc.protocol_text);
      if (!doc.distractor_text.empty()) {
        write_file_atomic((root / "distractors" / (doc.name + ".protocol.txt")).string(),
                          doc.distractor_text);
      }
      std::vector<Json> spans;
      for (const auto& a : doc.gold_spans) spans.push_back(span_annotation_to_json(a));
      write_file_atomic((root / "gold" / (doc.name + ".spans.jsonl")).string(),
                        dump_jsonl(spans));
      std::vector<Json> rels;
      for (const auto& a : doc.gold_relations)
        rels.push_back(relation_annotation_to_json(a));
      write_file_atomic((root / "gold" / (doc.name + ".relations.jsonl")).string(),
                        dump_jsonl(rels));
    }
    write_file_atomic((root / "embeddings.txt").string(), fixture_embeddings_text());
    save_json((root / "fixtures.json").string(), manifest);
  }
}

}  // namespace pke
