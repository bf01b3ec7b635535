#include "pke/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pke/common.hpp"

namespace pke {

SamplingPortion portion_from_string(const std::string& s) {
  SamplingPortion p;
  int vals[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t next = (i < 2) ? s.find(':', pos) : s.size();
    if (next == std::string::npos) throw DataError("bad sampling portion: " + s);
    std::string part = s.substr(pos, next - pos);
    if (part.empty()) throw DataError("bad sampling portion: " + s);
    for (char c : part) {
      if (!is_ascii_digit(c)) throw DataError("bad sampling portion: " + s);
    }
    vals[i] = std::stoi(part);
    if (vals[i] <= 0) throw DataError("sampling portion weights must be positive: " + s);
    pos = next + 1;
  }
  p.none_w = vals[0];
  p.next_w = vals[1];
  p.if_w = vals[2];
  return p;
}

std::string portion_to_string(const SamplingPortion& p) {
  return std::to_string(p.none_w) + ":" + std::to_string(p.next_w) + ":" +
         std::to_string(p.if_w);
}

std::vector<std::string> iobes_tags(int sent_len, std::vector<std::pair<int, int>> spans) {
  for (const auto& [start, end] : spans) {
    if (start < 0 || end > sent_len || start >= end) {
      throw UsageError("span [" + std::to_string(start) + "," + std::to_string(end) +
                       ") out of bounds for sentence of length " + std::to_string(sent_len));
    }
  }
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<int, int>> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.first < merged.back().second) {
      merged.back().second = std::max(merged.back().second, s.second);
    } else {
      merged.push_back(s);
    }
  }
  std::vector<std::string> tags(static_cast<std::size_t>(sent_len), "O");
  for (const auto& [start, end] : merged) {
    if (end - start == 1) {
      tags[static_cast<std::size_t>(start)] = "S";
    } else {
      tags[static_cast<std::size_t>(start)] = "B";
      for (int i = start + 1; i < end - 1; ++i) tags[static_cast<std::size_t>(i)] = "I";
      tags[static_cast<std::size_t>(end - 1)] = "E";
    }
  }
  return tags;
}

bool is_valid_iobes(const std::vector<std::string>& tags) {
  // Transition table over {B,I,E,S,O} with virtual start/end: inside a
  // segment only I/E may follow B/I; outside, only B/S/O may appear.
  bool inside = false;
  for (const std::string& tag : tags) {
    if (tag == "B") {
      if (inside) return false;
      inside = true;
    } else if (tag == "I") {
      if (!inside) return false;
    } else if (tag == "E") {
      if (!inside) return false;
      inside = false;
    } else if (tag == "S" || tag == "O") {
      if (inside) return false;
    } else {
      return false;  // unknown symbol
    }
  }
  return !inside;
}

std::vector<SeqExample> build_seq_dataset(const MatchedGraph& m, const Transcript& t) {
  std::map<int, std::vector<std::pair<int, int>>> by_sentence;
  for (const auto& [id, result] : m.matches) {
    by_sentence[result.span.sent_index].push_back({result.span.start, result.span.end});
  }
  std::vector<SeqExample> out;
  out.reserve(t.lines.size());
  for (const TranscriptLine& line : t.lines) {
    SeqExample ex;
    ex.doc = t.id;
    ex.sent_index = line.sent_index;
    ex.tokens = line.tokens;
    auto it = by_sentence.find(line.sent_index);
    std::vector<std::pair<int, int>> spans =
        (it == by_sentence.end()) ? std::vector<std::pair<int, int>>{} : it->second;
    ex.tags = iobes_tags(static_cast<int>(line.tokens.size()), std::move(spans));
    out.push_back(std::move(ex));
  }
  return out;
}

ContextWindow context_window(const Transcript& t, const TextSpan& span, int k) {
  if (k < 0) throw UsageError("context level k must be >= 0");
  const TranscriptLine& host = span_line(t, span);
  if (span.start < 0 || span.end > static_cast<int>(host.tokens.size()) ||
      span.start >= span.end) {
    throw UsageError("context_window: span out of bounds");
  }
  ContextWindow w;
  w.doc = t.id;
  w.span = span;
  w.k = k;
  w.span_tokens.assign(host.tokens.begin() + span.start, host.tokens.begin() + span.end);
  int first = std::max(0, span.sent_index - k);
  for (int i = first; i < span.sent_index; ++i) {
    const TranscriptLine& line = t.lines[static_cast<std::size_t>(i)];
    w.left.push_back(ContextSentence{line.sent_index, line.tokens});
  }
  int last = std::min(static_cast<int>(t.lines.size()) - 1, span.sent_index + k);
  for (int i = span.sent_index + 1; i <= last; ++i) {
    const TranscriptLine& line = t.lines[static_cast<std::size_t>(i)];
    w.right.push_back(ContextSentence{line.sent_index, line.tokens});
  }
  return w;
}

namespace {

int clamp10(int v) { return std::max(-10, std::min(10, v)); }

}  // namespace

std::vector<int> context_positions(const ContextWindow& w) {
  std::vector<int> out;
  out.reserve(w.left.size() + 2 + w.right.size());
  int p_t = w.span.sent_index;
  for (const ContextSentence& s : w.left) out.push_back(clamp10(s.sent_index - p_t - 1));
  out.push_back(-1);  // the host sentence before the span
  out.push_back(1);   // the span onward
  for (const ContextSentence& s : w.right) out.push_back(clamp10(s.sent_index - p_t + 1));
  return out;
}

std::vector<PairExample> build_pair_dataset(const MatchedGraph& m, const Transcript& t,
                                            int k, int* dropped_edges) {
  // Unique matched spans in protocol order; several phrases may share one.
  std::vector<TextSpan> spans;
  std::map<std::string, int> span_of_phrase;  // phrase id -> span slot
  std::map<TextSpan, int> slot_of_span;
  for (const ProtocolPhrase& p : m.protocol.phrases) {
    auto it = m.matches.find(p.id);
    if (it == m.matches.end()) continue;
    const TextSpan& s = it->second.span;
    auto [slot_it, inserted] = slot_of_span.try_emplace(s, static_cast<int>(spans.size()));
    if (inserted) spans.push_back(s);
    span_of_phrase[p.id] = slot_it->second;
  }

  // Labels from projected protocol edges; first projected edge wins when two
  // edges land on the same ordered span pair.
  std::map<std::pair<int, int>, RelationLabel> labels;
  int dropped = 0;
  for (const ProtocolEdge& e : m.protocol.edges) {
    auto u = span_of_phrase.find(e.src);
    auto v = span_of_phrase.find(e.dst);
    if (u == span_of_phrase.end() || v == span_of_phrase.end()) {
      ++dropped;
      continue;
    }
    if (u->second == v->second) continue;  // both phrases matched the same span
    labels.try_emplace({u->second, v->second}, e.label);
  }
  if (dropped_edges) *dropped_edges = dropped;

  std::vector<ContextWindow> windows;
  windows.reserve(spans.size());
  for (const TextSpan& s : spans) windows.push_back(context_window(t, s, k));

  std::vector<PairExample> out;
  int n = static_cast<int>(spans.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      PairExample ex;
      ex.u = windows[static_cast<std::size_t>(i)];
      ex.v = windows[static_cast<std::size_t>(j)];
      auto it = labels.find({i, j});
      ex.label = (it == labels.end()) ? RelationLabel::None : it->second;
      ex.u_positions = context_positions(ex.u);
      ex.v_positions = context_positions(ex.v);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<PairExample> sample_labels(const std::vector<PairExample>& pairs,
                                       const SamplingPortion& portion, std::uint64_t seed,
                                       std::vector<std::string>* warnings) {
  std::vector<std::size_t> by_label[3];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_label[static_cast<int>(pairs[i].label)].push_back(i);
  }
  std::size_t m = by_label[static_cast<int>(RelationLabel::If)].size();
  auto target = [&](int weight) -> std::size_t {
    return m * static_cast<std::size_t>(weight) / static_cast<std::size_t>(portion.if_w);
  };
  std::size_t want[3];
  want[static_cast<int>(RelationLabel::None)] = target(portion.none_w);
  want[static_cast<int>(RelationLabel::Next)] = target(portion.next_w);
  want[static_cast<int>(RelationLabel::If)] = m;

  Rng rng(seed);
  std::vector<bool> keep(pairs.size(), false);
  for (RelationLabel label : {RelationLabel::None, RelationLabel::Next, RelationLabel::If}) {
    int c = static_cast<int>(label);
    std::vector<std::size_t>& idx = by_label[c];
    std::size_t n = want[c];
    if (n >= idx.size()) {
      if (n > idx.size() && warnings) {
        warnings->push_back("sample_labels: requested " + std::to_string(n) + " " +
                            relation_name(label) + " pairs but only " +
                            std::to_string(idx.size()) + " available; keeping all");
      }
      for (std::size_t i : idx) keep[i] = true;
      continue;
    }
    rng.shuffle(idx);
    for (std::size_t j = 0; j < n; ++j) keep[idx[j]] = true;
  }
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(pairs[i]);
  }
  return out;
}

DocSplit split_docs(std::vector<std::string> ids, std::uint64_t seed, double train_frac,
                    double dev_frac) {
  if (train_frac < 0 || dev_frac < 0 || train_frac + dev_frac > 1.0) {
    throw UsageError("split_docs: bad fractions");
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  std::size_t n = ids.size();
  std::size_t n_train = static_cast<std::size_t>(static_cast<double>(n) * train_frac);
  std::size_t n_dev = static_cast<std::size_t>(static_cast<double>(n) * dev_frac);
  DocSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      split.train.push_back(ids[i]);
    } else if (i < n_train + n_dev) {
      split.dev.push_back(ids[i]);
    } else {
      split.test.push_back(ids[i]);
    }
  }
  return split;
}

}  // namespace pke
