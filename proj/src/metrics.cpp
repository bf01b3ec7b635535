#include "pke/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pke/common.hpp"
#include "pke/dataset.hpp"

namespace pke {

namespace {

double f1_of(double p, double r) { return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

TokenMetrics token_metrics(const std::vector<std::vector<std::string>>& gold,
                           const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("token_metrics: " + std::to_string(gold.size()) + " gold vs " +
                    std::to_string(pred.size()) + " predicted sentences");
  }
  if (gold.empty()) throw DataError("token_metrics: no sentences");
  TokenMetrics out;
  long micro_correct = 0;
  long micro_total = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& g = gold[s];
    const auto& p = pred[s];
    if (g.size() != p.size()) {
      throw DataError("token_metrics: sentence " + std::to_string(s) + " has " +
                      std::to_string(g.size()) + " gold vs " + std::to_string(p.size()) +
                      " predicted tags");
    }
    if (g.empty()) {
      out.per_sentence_accuracy.push_back(1.0);
      out.per_sentence_f1.push_back(1.0);
      continue;
    }
    int correct = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      bool gold_in = g[i] != "O";
      bool pred_in = p[i] != "O";
      if (g[i] == p[i]) ++correct;
      if (gold_in && pred_in) ++tp;
      if (!gold_in && pred_in) ++fp;
      if (gold_in && !pred_in) ++fn;
    }
    micro_correct += correct;
    micro_total += static_cast<long>(g.size());
    out.per_sentence_accuracy.push_back(static_cast<double>(correct) /
                                        static_cast<double>(g.size()));
    double f1;
    if (tp + fp + fn == 0) {
      f1 = 1.0;  // no span tokens anywhere: vacuously perfect
    } else {
      double p_ = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
      double r_ = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
      f1 = f1_of(p_, r_);
    }
    out.per_sentence_f1.push_back(f1);
  }
  double acc = 0.0, f1 = 0.0;
  for (double v : out.per_sentence_accuracy) acc += v;
  for (double v : out.per_sentence_f1) f1 += v;
  out.accuracy = acc / static_cast<double>(out.per_sentence_accuracy.size());
  out.f1 = f1 / static_cast<double>(out.per_sentence_f1.size());
  out.micro_accuracy =
      micro_total == 0 ? 1.0 : static_cast<double>(micro_correct) / static_cast<double>(micro_total);
  return out;
}

MentionMetrics mention_metrics_from_counts(int hits, int gold_count, int pred_count) {
  MentionMetrics m;
  m.hits = hits;
  m.gold_count = gold_count;
  m.pred_count = pred_count;
  if (gold_count == 0 && pred_count == 0) {
    m.precision = m.recall = m.f1 = m.accuracy = 1.0;
    return m;
  }
  m.precision = pred_count == 0 ? 0.0 : static_cast<double>(hits) / pred_count;
  m.recall = gold_count == 0 ? 0.0 : static_cast<double>(hits) / gold_count;
  m.f1 = f1_of(m.precision, m.recall);
  m.accuracy = gold_count == 0 ? 0.0 : static_cast<double>(hits) / gold_count;
  return m;
}

MentionMetrics mention_metrics(const std::vector<TextSpan>& gold,
                               const std::vector<TextSpan>& pred) {
  std::set<TextSpan> g(gold.begin(), gold.end());
  std::set<TextSpan> p(pred.begin(), pred.end());
  int hits = 0;
  for (const TextSpan& s : p) hits += g.count(s) > 0 ? 1 : 0;
  return mention_metrics_from_counts(hits, static_cast<int>(g.size()),
                                     static_cast<int>(p.size()));
}

RelationMetrics relation_metrics(const std::vector<RelationLabel>& gold,
                                 const std::vector<RelationLabel>& pred, bool include_none) {
  if (gold.size() != pred.size()) {
    throw DataError("relation_metrics: " + std::to_string(gold.size()) + " gold vs " +
                    std::to_string(pred.size()) + " predicted labels");
  }
  if (gold.empty()) throw DataError("relation_metrics: no pairs");
  RelationMetrics out;
  int correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    int g = static_cast<int>(gold[i]);
    int p = static_cast<int>(pred[i]);
    ++out.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    if (g == p) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());

  auto label_prf = [&](int c) {
    int tp = out.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    int pred_c = 0, gold_c = 0;
    for (int o = 0; o < 3; ++o) {
      pred_c += out.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
      gold_c += out.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
    }
    double p = pred_c == 0 ? 0.0 : static_cast<double>(tp) / pred_c;
    double r = gold_c == 0 ? 0.0 : static_cast<double>(tp) / gold_c;
    return std::array<double, 2>{p, r};
  };
  auto next_pr = label_prf(static_cast<int>(RelationLabel::Next));
  auto if_pr = label_prf(static_cast<int>(RelationLabel::If));
  out.next_f1 = f1_of(next_pr[0], next_pr[1]);
  out.if_f1 = f1_of(if_pr[0], if_pr[1]);

  // Micro-F1 pools true/false positives over the positive labels; None is
  // the negative class unless include_none.
  int first = include_none ? 0 : 1;
  int tp = 0, fp = 0, fn = 0;
  for (int c = first; c < 3; ++c) {
    int tpc = out.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    int predc = 0, goldc = 0;
    for (int o = 0; o < 3; ++o) {
      predc += out.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
      goldc += out.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
    }
    tp += tpc;
    fp += predc - tpc;
    fn += goldc - tpc;
  }
  double p = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  double r = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  out.micro_f1 = f1_of(p, r);
  return out;
}

std::pair<double, double> aggregate_runs(const std::vector<double>& runs) {
  if (runs.empty()) throw UsageError("aggregate_runs: no values");
  double mean = 0.0;
  for (double v : runs) mean += v;
  mean /= static_cast<double>(runs.size());
  if (runs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : runs) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(runs.size() - 1))};
}

namespace {

bool spans_overlap(const TextSpan& a, const TextSpan& b) {
  return a.sent_index == b.sent_index && a.start < b.end && b.start < a.end;
}

}  // namespace

MatchingEval evaluate_matching(const Transcript& t,
                               const std::vector<SpanAnnotation>& annotations,
                               const std::vector<ReportEntry>& report) {
  std::map<std::string, const SpanAnnotation*> by_id;
  for (const SpanAnnotation& a : annotations) {
    if (!by_id.emplace(a.phrase_id, &a).second) {
      throw DataError("duplicate annotation for phrase '" + a.phrase_id + "'");
    }
  }
  std::map<std::string, const ReportEntry*> predicted;
  for (const ReportEntry& e : report) {
    if (!by_id.count(e.phrase_id)) {
      throw DataError("report entry for unannotated phrase '" + e.phrase_id + "'");
    }
    if (!predicted.emplace(e.phrase_id, &e).second) {
      throw DataError("duplicate report entry for phrase '" + e.phrase_id + "'");
    }
  }

  MatchingEval out;
  int gold_count = 0, pred_count = 0, exact_hits = 0, overlap_hits = 0;
  for (const SpanAnnotation& a : annotations) {
    ++out.phrases_scored;
    if (!a.gold_span) ++out.noisy_gold;
    auto it = predicted.find(a.phrase_id);
    const ReportEntry* e = it == predicted.end() ? nullptr : it->second;
    bool has_pred = e && e->span.has_value();
    if (a.gold_span) ++gold_count;
    if (has_pred) ++pred_count;
    if (a.gold_span && has_pred) {
      if (*a.gold_span == *e->span) ++exact_hits;
      if (spans_overlap(*a.gold_span, *e->span)) ++overlap_hits;
    }
  }
  out.exact = mention_metrics_from_counts(exact_hits, gold_count, pred_count);
  out.overlap = mention_metrics_from_counts(overlap_hits, gold_count, pred_count);

  // Token metrics over tags induced on every transcript sentence.
  std::map<int, std::vector<std::pair<int, int>>> gold_spans, pred_spans;
  for (const SpanAnnotation& a : annotations) {
    if (a.gold_span) {
      gold_spans[a.gold_span->sent_index].push_back({a.gold_span->start, a.gold_span->end});
    }
    auto it = predicted.find(a.phrase_id);
    if (it != predicted.end() && it->second->span) {
      const TextSpan& s = *it->second->span;
      pred_spans[s.sent_index].push_back({s.start, s.end});
    }
  }
  std::vector<std::vector<std::string>> gold_tags, pred_tags;
  for (const TranscriptLine& line : t.lines) {
    int len = static_cast<int>(line.tokens.size());
    auto g = gold_spans.find(line.sent_index);
    auto p = pred_spans.find(line.sent_index);
    gold_tags.push_back(iobes_tags(
        len, g == gold_spans.end() ? std::vector<std::pair<int, int>>{} : g->second));
    pred_tags.push_back(iobes_tags(
        len, p == pred_spans.end() ? std::vector<std::pair<int, int>>{} : p->second));
  }
  out.token = token_metrics(gold_tags, pred_tags);
  return out;
}

}  // namespace pke
