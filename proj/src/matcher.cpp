#include "pke/matcher.hpp"

#include <algorithm>
#include <memory>

#include "pke/common.hpp"

namespace pke {

const char* match_status_name(MatchStatus s) {
  switch (s) {
    case MatchStatus::Matched: return "correct-candidate";
    case MatchStatus::Dropped: return "dropped";
    case MatchStatus::Uninformative: return "uninformative";
  }
  return "dropped";
}

MatchStatus match_status_from_name(const std::string& s) {
  if (s == "correct-candidate") return MatchStatus::Matched;
  if (s == "dropped") return MatchStatus::Dropped;
  if (s == "uninformative") return MatchStatus::Uninformative;
  throw DataError("unknown match status: " + s);
}

EmbedFn table_embedder(const EmbeddingTable& table) {
  return [&table](const std::vector<std::string>& tokens, const std::string&) {
    return embed_phrase(tokens, table);
  };
}

EmbedFn cached_embedder(std::map<std::string, Vector> cache, EmbedFn fallback) {
  auto shared = std::make_shared<std::map<std::string, Vector>>(std::move(cache));
  return [shared, fallback](const std::vector<std::string>& tokens, const std::string& key) {
    auto it = shared->find(key);
    if (it != shared->end()) {
      PhraseEmbedding e;
      e.vec = it->second;
      e.known = static_cast<int>(tokens.size());
      return e;
    }
    return fallback(tokens, key);
  };
}

std::vector<TextSpan> candidate_spans(const Transcript& t, const std::set<int>& scope,
                                      const MatcherConfig& cfg,
                                      std::vector<std::string>* diags) {
  std::vector<const TranscriptLine*> lines;
  for (int line_no : scope) {
    const TranscriptLine* line = t.line_by_no(line_no);
    if (!line) {
      if (diags) {
        diags->push_back("warning: line " + std::to_string(line_no) + " not in transcript " +
                         t.id + "; skipped");
      }
      continue;
    }
    lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end(), [](const TranscriptLine* a, const TranscriptLine* b) {
    return a->sent_index < b->sent_index;
  });
  std::vector<TextSpan> out;
  for (const TranscriptLine* line : lines) {
    std::vector<TextSpan> spans = enumerate_spans(*line, cfg.span_min, cfg.span_max);
    out.insert(out.end(), spans.begin(), spans.end());
  }
  return out;
}

namespace {

std::string span_key(const std::string& doc, const TextSpan& s) {
  return "span:" + doc + ":" + std::to_string(s.sent_index) + ":" + std::to_string(s.start) +
         ":" + std::to_string(s.end);
}

std::vector<std::string> span_tokens(const Transcript& t, const TextSpan& s) {
  const TranscriptLine& line = span_line(t, s);
  return std::vector<std::string>(line.tokens.begin() + s.start, line.tokens.begin() + s.end);
}

struct SpanScore {
  double score = 0.0;
  bool informative = false;  // span had at least one in-vocabulary token
};

SpanScore score_one(const Vector& phrase_vec, const TextSpan& span, const Transcript& t,
                    const EmbedFn& embed, const std::string& doc) {
  PhraseEmbedding e = embed(span_tokens(t, span), span_key(doc, span));
  SpanScore out;
  out.informative = e.known > 0;
  out.score = cosine(phrase_vec, e.vec);
  return out;
}

std::vector<SpanScore> score_all(const Vector& phrase_vec, const std::vector<TextSpan>& spans,
                                 const Transcript& t, const EmbedFn& embed,
                                 const std::string& doc, bool parallel) {
  std::vector<SpanScore> out(spans.size());
  if (parallel) {
    // Each slot is written by exactly one iteration, so the result does not
    // depend on the schedule or thread count.
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(spans.size()); ++i) {
      out[static_cast<std::size_t>(i)] =
          score_one(phrase_vec, spans[static_cast<std::size_t>(i)], t, embed, doc);
    }
  } else {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      out[i] = score_one(phrase_vec, spans[i], t, embed, doc);
    }
  }
  return out;
}

}  // namespace

std::vector<double> score_spans_serial(const Vector& phrase_vec,
                                       const std::vector<TextSpan>& spans, const Transcript& t,
                                       const EmbedFn& embed, const std::string& doc) {
  std::vector<SpanScore> scored = score_all(phrase_vec, spans, t, embed, doc, false);
  std::vector<double> out(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) out[i] = scored[i].score;
  return out;
}

std::vector<double> score_spans_parallel(const Vector& phrase_vec,
                                         const std::vector<TextSpan>& spans, const Transcript& t,
                                         const EmbedFn& embed, const std::string& doc) {
  std::vector<SpanScore> scored = score_all(phrase_vec, spans, t, embed, doc, true);
  std::vector<double> out(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) out[i] = scored[i].score;
  return out;
}

PhraseMatchOutcome match_phrase_outcome(const ProtocolPhrase& p, const Transcript& t,
                                        const MatcherConfig& cfg, const EmbedFn& embed) {
  std::vector<std::string> tokens = tokenize(p.text);
  if (tokens.empty()) throw UsageError("phrase '" + p.id + "' has no tokens");

  PhraseMatchOutcome out;
  std::set<int> scope;
  if (cfg.search_scope == SearchScope::SourceLinesOnly) {
    scope.insert(p.source_lines.begin(), p.source_lines.end());
  } else {
    for (const TranscriptLine& line : t.lines) scope.insert(line.line_no);
  }
  std::vector<TextSpan> spans = candidate_spans(t, scope, cfg, &out.diagnostics);
  if (spans.empty()) {
    out.status = MatchStatus::Dropped;
    out.diagnostics.push_back("phrase '" + p.id + "': no candidate spans");
    return out;
  }

  PhraseEmbedding pe = embed(tokens, "phrase:" + p.id);
  std::vector<SpanScore> scored = score_all(pe.vec, spans, t, embed, t.id, cfg.parallel);

  bool any_informative = false;
  int best = -1;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    any_informative = any_informative || scored[i].informative;
    // Strict > keeps the (sent_index, start, end)-smallest span on ties,
    // since candidates arrive in that order.
    if (best < 0 || scored[i].score > scored[static_cast<std::size_t>(best)].score) {
      best = static_cast<int>(i);
    }
  }
  out.best_score = scored[static_cast<std::size_t>(best)].score;

  if (pe.known == 0 || !any_informative) {
    out.status = MatchStatus::Uninformative;
    out.diagnostics.push_back("phrase '" + p.id + "': uninformative embedding");
    return out;
  }
  if (out.best_score <= cfg.threshold) {
    out.status = MatchStatus::Dropped;
    return out;
  }
  out.status = MatchStatus::Matched;
  out.result = MatchResult{p.id, spans[static_cast<std::size_t>(best)], out.best_score,
                           MatchMethod::Fuzzy};
  return out;
}

std::optional<MatchResult> match_phrase(const ProtocolPhrase& p, const Transcript& t,
                                        const MatcherConfig& cfg, const EmbeddingTable& emb) {
  return match_phrase_outcome(p, t, cfg, table_embedder(emb)).result;
}

std::optional<TextSpan> exact_match_baseline(const ProtocolPhrase& p, const Transcript& t,
                                             const std::set<int>& scope) {
  std::vector<std::string> phrase = tokenize(p.text);
  if (phrase.empty()) throw UsageError("phrase '" + p.id + "' has no tokens");
  for (std::string& tok : phrase) tok = lower_copy(tok);

  std::vector<const TranscriptLine*> lines;
  for (int line_no : scope) {
    const TranscriptLine* line = t.line_by_no(line_no);
    if (line) lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end(), [](const TranscriptLine* a, const TranscriptLine* b) {
    return a->sent_index < b->sent_index;
  });

  std::optional<TextSpan> best;
  int best_len = 1;  // require length >= 2
  for (const TranscriptLine* line : lines) {
    int n = static_cast<int>(line->tokens.size());
    int m = static_cast<int>(phrase.size());
    // run[j] = length of the common run ending at sentence token i, phrase token j
    std::vector<int> prev(static_cast<std::size_t>(m), 0);
    std::vector<int> cur(static_cast<std::size_t>(m), 0);
    for (int i = 0; i < n; ++i) {
      std::string tok = lower_copy(line->tokens[static_cast<std::size_t>(i)]);
      for (int j = 0; j < m; ++j) {
        if (tok == phrase[static_cast<std::size_t>(j)]) {
          cur[static_cast<std::size_t>(j)] =
              (j > 0 ? prev[static_cast<std::size_t>(j - 1)] : 0) + 1;
        } else {
          cur[static_cast<std::size_t>(j)] = 0;
        }
        int len = cur[static_cast<std::size_t>(j)];
        if (len > best_len) {
          best_len = len;
          best = TextSpan{line->sent_index, i - len + 1, i + 1};
        }
      }
      std::swap(prev, cur);
    }
  }
  return best;
}

MatchedGraph match_protocol(const ProtocolGraph& g, const Transcript& t,
                            const MatcherConfig& cfg, const EmbedFn& embed) {
  MatchedGraph out;
  out.doc = t.id;
  out.protocol = g;
  std::vector<PhraseMatchOutcome> outcomes(g.phrases.size());
  // Phrases are independent; results land in per-phrase slots and are folded
  // back in protocol order below. Span scoring stays serial inside each
  // phrase to avoid nested parallel regions.
  MatcherConfig inner = cfg;
  bool phrase_parallel = cfg.parallel && g.phrases.size() > 1;
  inner.parallel = cfg.parallel && !phrase_parallel;
#pragma omp parallel for schedule(dynamic) if (phrase_parallel)
  for (long i = 0; i < static_cast<long>(g.phrases.size()); ++i) {
    outcomes[static_cast<std::size_t>(i)] =
        match_phrase_outcome(g.phrases[static_cast<std::size_t>(i)], t, inner, embed);
  }
  for (std::size_t i = 0; i < g.phrases.size(); ++i) {
    const ProtocolPhrase& p = g.phrases[i];
    out.statuses[p.id] = outcomes[i].status;
    if (outcomes[i].result) out.matches[p.id] = *outcomes[i].result;
    out.diagnostics.insert(out.diagnostics.end(), outcomes[i].diagnostics.begin(),
                           outcomes[i].diagnostics.end());
  }
  return out;
}

MatchedGraph match_protocol(const ProtocolGraph& g, const Transcript& t,
                            const MatcherConfig& cfg, const EmbeddingTable& emb) {
  return match_protocol(g, t, cfg, table_embedder(emb));
}

}  // namespace pke
