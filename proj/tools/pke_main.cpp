// pke: weak-supervision pipeline from interview transcripts + written
// protocols to a procedural knowledge graph.
//
// Subcommands: make-fixtures, parse-protocol, match, gen-datasets,
// train-seq, train-re, predict, assemble, evaluate, sweep.
//
// Every option can also be supplied through a flat key-value config file
// (--config FILE; lines "key value" or "key = value", '#' comments). Flags
// override the environment (PKE_SEED, PKE_FIXTURES), which overrides the
// config file. Exit codes: 0 ok, 1 usage, 2 data/format, 3 validation.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pke/common.hpp"
#include "pke/corpus.hpp"
#include "pke/crf.hpp"
#include "pke/dataset.hpp"
#include "pke/embeddings.hpp"
#include "pke/fixtures.hpp"
#include "pke/jsonio.hpp"
#include "pke/matcher.hpp"
#include "pke/metrics.hpp"
#include "pke/pipeline.hpp"
#include "pke/protocol.hpp"
#include "pke/relation.hpp"

namespace {

using namespace pke;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Flat config file + binding registry

std::map<std::string, std::string> load_flat_config(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::string text = slurp_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string value;
    std::string word;
    while (ls >> word) {
      if (word == "=" && value.empty()) continue;
      if (!value.empty()) value += ' ';
      value += word;
    }
    if (!value.empty() && value.front() == '=') value.erase(0, 1);
    if (value.empty())
      throw UsageError(path + ":" + std::to_string(line_no) + ": config key '" + key +
                       "' has no value");
    kv[key] = value;
  }
  return kv;
}

template <typename T>
T parse_config_value(const std::string& key, const std::string& raw);

template <>
std::string parse_config_value<std::string>(const std::string&, const std::string& raw) {
  return raw;
}

template <>
double parse_config_value<double>(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': not a number: " + raw);
  }
}

template <>
int parse_config_value<int>(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': not an integer: " + raw);
  }
}

template <>
std::uint64_t parse_config_value<std::uint64_t>(const std::string& key,
                                                const std::string& raw) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': not an unsigned integer: " + raw);
  }
}

template <>
bool parse_config_value<bool>(const std::string& key, const std::string& raw) {
  std::string s = lower_copy(raw);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw UsageError("config key '" + key + "': not a boolean: " + raw);
}

/// Maps config keys onto the same variables the flags bind, so precedence
/// is simply application order: config file, then environment, then flags.
class Binder {
 public:
  template <typename T>
  void bind(const std::string& key, T* var) {
    setters_[key].push_back(
        [key, var](const std::string& raw) { *var = parse_config_value<T>(key, raw); });
  }

  void apply(const std::map<std::string, std::string>& kv) const {
    for (const auto& [key, value] : kv) {
      auto it = setters_.find(key);
      if (it == setters_.end()) throw UsageError("unknown config key: " + key);
      for (const auto& set : it->second) set(value);
    }
  }

  void apply_one(const std::string& key, const std::string& value) const {
    auto it = setters_.find(key);
    if (it == setters_.end()) return;
    for (const auto& set : it->second) set(value);
  }

 private:
  std::map<std::string, std::vector<std::function<void(const std::string&)>>> setters_;
};

// ---------------------------------------------------------------------------
// Shared option blocks

struct MatcherOpts {
  double threshold = 0.5;
  int span_min = 2;
  int span_max = 30;
  std::string scope = "source-lines";
  bool parallel = true;
};

void add_matcher_opts(CLI::App* cmd, MatcherOpts& o, Binder& binder,
                      bool with_parallel = true) {
  cmd->add_option("--threshold", o.threshold, "cosine acceptance threshold (strict >)");
  cmd->add_option("--span-min", o.span_min, "minimum candidate span length");
  cmd->add_option("--span-max", o.span_max, "maximum candidate span length");
  cmd->add_option("--scope", o.scope, "candidate scope: source-lines | whole-transcript");
  if (with_parallel) cmd->add_flag("--parallel,!--no-parallel", o.parallel, "parallel span scoring");
  binder.bind("threshold", &o.threshold);
  binder.bind("span-min", &o.span_min);
  binder.bind("span-max", &o.span_max);
  binder.bind("scope", &o.scope);
  if (with_parallel) binder.bind("parallel", &o.parallel);
}

MatcherConfig matcher_config(const MatcherOpts& o) {
  MatcherConfig cfg;
  if (o.threshold < 0.0 || o.threshold > 1.0)
    throw UsageError("threshold must lie in [0, 1]");
  if (o.span_min < 1) throw UsageError("span-min must be at least 1");
  if (o.span_max < o.span_min) throw UsageError("span-max must be >= span-min");
  cfg.threshold = o.threshold;
  cfg.span_min = o.span_min;
  cfg.span_max = o.span_max;
  if (o.scope == "source-lines") {
    cfg.search_scope = SearchScope::SourceLinesOnly;
  } else if (o.scope == "whole-transcript") {
    cfg.search_scope = SearchScope::WholeTranscript;
  } else {
    throw UsageError("scope must be source-lines or whole-transcript");
  }
  cfg.parallel = o.parallel;
  return cfg;
}

struct TrainOpts {
  double l2 = 1.0;
  double lr = 0.1;
  int epochs = 50;
  int batch = 32;
  std::uint64_t seed = 1;
  bool parallel = true;
  bool trace = false;
};

void add_train_opts(CLI::App* cmd, TrainOpts& o, Binder& binder, bool with_seed = true) {
  cmd->add_option("--l2", o.l2, "L2 regularization strength");
  cmd->add_option("--lr", o.lr, "initial learning rate (decays as 1/sqrt(epoch))");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--batch", o.batch, "minibatch size");
  if (with_seed) {
    cmd->add_option("--seed", o.seed, "shuffling seed");
    binder.bind("seed", &o.seed);
  }
  cmd->add_flag("--parallel,!--no-parallel", o.parallel, "parallel gradient batches");
  cmd->add_flag("--trace", o.trace, "print per-epoch loss to stderr");
  binder.bind("l2", &o.l2);
  binder.bind("lr", &o.lr);
  binder.bind("epochs", &o.epochs);
  binder.bind("batch", &o.batch);
  binder.bind("parallel", &o.parallel);
}

void check_train_opts(const TrainOpts& o) {
  if (o.l2 < 0.0) throw UsageError("l2 must be non-negative");
  if (o.lr <= 0.0) throw UsageError("lr must be positive");
  if (o.epochs < 1) throw UsageError("epochs must be at least 1");
  if (o.batch < 1) throw UsageError("batch must be at least 1");
}

// ---------------------------------------------------------------------------
// Small I/O helpers

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing ") + flag);
}

void emit(const std::string& path, const std::string& text) {
  if (path == "-" || path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::string doc_id_from(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  std::size_t dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

Transcript load_transcript_file(const std::string& path) {
  std::string text = slurp_file(path);
  std::istringstream in(text);
  return load_transcript(in, doc_id_from(path));
}

ProtocolGraph load_protocol_file(const std::string& path) {
  std::string text = slurp_file(path);
  std::size_t i = text.find_first_not_of(" \t\r\n");
  if (i != std::string::npos && text[i] == '{') return graph_from_json(load_json(path));
  std::istringstream in(text);
  return parse_protocol(in);
}

EmbeddingTable load_embeddings_file(const std::string& path) {
  std::string text = slurp_file(path);
  std::istringstream in(text);
  return load_embeddings(in);
}

std::vector<Json> read_jsonl_file(const std::string& path, const std::string& what) {
  std::string text = slurp_file(path);
  std::istringstream in(text);
  return read_jsonl(in, what);
}

std::vector<SeqExample> load_seq_file(const std::string& path) {
  std::vector<SeqExample> out;
  for (const Json& j : read_jsonl_file(path, "sequence examples")) {
    out.push_back(seq_from_json(j));
  }
  return out;
}

std::vector<PairExample> load_pairs_file(const std::string& path) {
  std::vector<PairExample> out;
  for (const Json& j : read_jsonl_file(path, "pair examples")) {
    out.push_back(pair_from_json(j));
  }
  return out;
}

std::vector<SpanAnnotation> load_span_annotations(const std::string& path) {
  std::string text = slurp_file(path);
  std::istringstream in(text);
  return span_annotations_from_jsonl(in);
}

std::vector<RelationAnnotation> load_relation_annotations(const std::string& path) {
  std::string text = slurp_file(path);
  std::istringstream in(text);
  return relation_annotations_from_jsonl(in);
}

void print_warnings(const std::vector<std::string>& notes) {
  for (const auto& n : notes) std::cerr << n << "\n";
}

/// One corpus document: <id>.transcript.txt plus <id>.protocol.txt.
struct CorpusDoc {
  std::string id;
  std::string transcript_path;
  std::string protocol_path;
};

std::vector<CorpusDoc> scan_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<CorpusDoc> docs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    std::size_t pos = name.find(".transcript.txt");
    if (pos == std::string::npos || pos + 15 != name.size()) continue;
    CorpusDoc d;
    d.id = name.substr(0, pos);
    d.transcript_path = entry.path().string();
    d.protocol_path = (fs::path(dir) / (d.id + ".protocol.txt")).string();
    if (!fs::exists(d.protocol_path))
      throw DataError("missing protocol for " + d.id + ": " + d.protocol_path);
    docs.push_back(std::move(d));
  }
  std::sort(docs.begin(), docs.end(),
            [](const CorpusDoc& a, const CorpusDoc& b) { return a.id < b.id; });
  if (docs.empty()) throw DataError("no *.transcript.txt files under " + dir);
  return docs;
}

std::string format_pct(double mean, double std_dev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean * 100.0, std_dev * 100.0);
  return buf;
}

Json mention_to_json(const MentionMetrics& m) {
  return Json{{"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1},
              {"accuracy", m.accuracy},   {"gold", m.gold_count},   {"pred", m.pred_count},
              {"hits", m.hits}};
}

Json token_to_json(const TokenMetrics& m) {
  return Json{{"accuracy", m.accuracy},
              {"f1", m.f1},
              {"micro_accuracy", m.micro_accuracy}};
}

Json relation_to_json(const RelationMetrics& m) {
  Json confusion = Json::array();
  for (int g = 0; g < 3; ++g) {
    Json row = Json::array();
    for (int p = 0; p < 3; ++p) row.push_back(m.confusion[g][p]);
    confusion.push_back(row);
  }
  return Json{{"accuracy", m.accuracy},
              {"micro_f1", m.micro_f1},
              {"next_f1", m.next_f1},
              {"if_f1", m.if_f1},
              {"confusion", confusion}};
}

// ---------------------------------------------------------------------------
// Subcommand implementations

struct MakeFixturesOpts {
  std::string out = "fixtures";
  std::string family = "both";
  int docs = 16;
  std::uint64_t seed = 7;
};

void run_make_fixtures(const MakeFixturesOpts& o) {
  if (o.family != "both" && o.family != "separable" && o.family != "context")
    throw UsageError("family must be separable, context or both");
  FixtureConfig cfg;
  cfg.seed = o.seed;
  cfg.docs = o.docs;
  cfg.family = o.family;
  make_fixtures(o.out, cfg);
  std::cerr << "wrote " << o.family << " fixtures under " << o.out << "\n";
}

struct ParseProtocolOpts {
  std::string in;
  std::string out = "-";
  bool validate = false;
};

void run_parse_protocol(const ParseProtocolOpts& o) {
  require(o.in, "--in");
  ProtocolGraph g = load_protocol_file(o.in);
  if (o.validate) {
    auto notes = validate_graph(g);
    print_warnings(notes);
    for (const auto& n : notes) {
      if (n.rfind("error:", 0) == 0) throw ValidationError("protocol graph failed validation");
    }
  }
  emit(o.out, graph_to_json(g).dump(2) + "\n");
}

struct MatchOpts {
  std::string transcript;
  std::string protocol;
  std::string embeddings;
  std::string span_vectors;
  std::string out = "-";
  std::string method = "fuzzy";
  MatcherOpts matcher;
};

void run_match(const MatchOpts& o) {
  require(o.transcript, "--transcript");
  require(o.protocol, "--protocol");
  require(o.embeddings, "--embeddings");
  Transcript t = load_transcript_file(o.transcript);
  ProtocolGraph g = load_protocol_file(o.protocol);
  EmbeddingTable emb = load_embeddings_file(o.embeddings);
  MatcherConfig cfg = matcher_config(o.matcher);

  std::vector<ReportEntry> report;
  if (o.method == "fuzzy") {
    MatchedGraph m;
    if (!o.span_vectors.empty()) {
      std::string text = slurp_file(o.span_vectors);
      std::istringstream in(text);
      auto cache = span_embeddings_from_jsonl(in);
      m = match_protocol(g, t, cfg, cached_embedder(std::move(cache), table_embedder(emb)));
    } else {
      m = match_protocol(g, t, cfg, emb);
    }
    print_warnings(m.diagnostics);
    report = make_match_report(m, t);
  } else if (o.method == "exact") {
    for (const auto& p : g.phrases) {
      std::set<int> scope;
      if (cfg.search_scope == SearchScope::SourceLinesOnly) {
        scope.insert(p.source_lines.begin(), p.source_lines.end());
      } else {
        for (const auto& line : t.lines) scope.insert(line.line_no);
      }
      ReportEntry e;
      e.phrase_id = p.id;
      e.phrase_text = p.text;
      if (auto span = exact_match_baseline(p, t, scope)) {
        e.span = *span;
        e.span_text = span_text(t, *span);
        e.status = MatchStatus::Matched;
      } else {
        e.status = MatchStatus::Dropped;
      }
      report.push_back(std::move(e));
    }
  } else {
    throw UsageError("method must be fuzzy or exact");
  }

  std::vector<Json> rows;
  for (const auto& e : report) rows.push_back(report_entry_to_json(e));
  emit(o.out, dump_jsonl(rows));
}

struct GenDatasetsOpts {
  std::string corpus;
  std::string embeddings;
  std::string out;
  int k = 2;
  std::string portion = "4:2:1";
  std::uint64_t seed = 1;
  double train_frac = 0.8;
  double dev_frac = 0.1;
  MatcherOpts matcher;
};

void run_gen_datasets(const GenDatasetsOpts& o) {
  require(o.corpus, "--corpus");
  require(o.embeddings, "--embeddings");
  require(o.out, "--out");
  if (o.k < 0) throw UsageError("k must be non-negative");
  if (o.train_frac <= 0.0 || o.dev_frac < 0.0 || o.train_frac + o.dev_frac >= 1.0)
    throw UsageError("fractions must satisfy 0 < train, 0 <= dev, train + dev < 1");
  SamplingPortion portion = portion_from_string(o.portion);
  MatcherConfig mcfg = matcher_config(o.matcher);
  EmbeddingTable emb = load_embeddings_file(o.embeddings);

  auto docs = scan_corpus(o.corpus);
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  DocSplit split = split_docs(ids, o.seed, o.train_frac, o.dev_frac);
  auto fold_of = [&](const std::string& id) -> const char* {
    for (const auto& x : split.train)
      if (x == id) return "train";
    for (const auto& x : split.dev)
      if (x == id) return "dev";
    return "test";
  };

  std::map<std::string, std::vector<SeqExample>> seq_by_fold;
  std::map<std::string, std::vector<PairExample>> pairs_by_fold;
  std::map<std::string, int> status_counts;
  int dropped_edges = 0;
  std::vector<std::string> warnings;
  for (const auto& d : docs) {
    Transcript t = load_transcript_file(d.transcript_path);
    ProtocolGraph g = load_protocol_file(d.protocol_path);
    MatchedGraph m = match_protocol(g, t, mcfg, emb);
    for (const auto& n : m.diagnostics) warnings.push_back(d.id + ": " + n);
    for (const auto& [id, status] : m.statuses) ++status_counts[match_status_name(status)];
    const char* fold = fold_of(d.id);
    auto seq = build_seq_dataset(m, t);
    auto& seq_dst = seq_by_fold[fold];
    seq_dst.insert(seq_dst.end(), seq.begin(), seq.end());
    int dropped = 0;
    auto pairs = build_pair_dataset(m, t, o.k, &dropped);
    dropped_edges += dropped;
    auto& pair_dst = pairs_by_fold[fold];
    pair_dst.insert(pair_dst.end(), pairs.begin(), pairs.end());
  }

  pairs_by_fold["train"] =
      sample_labels(pairs_by_fold["train"], portion, o.seed, &warnings);
  print_warnings(warnings);

  fs::create_directories(o.out);
  Json counts;
  for (const char* fold : {"train", "dev", "test"}) {
    const auto& seq = seq_by_fold[fold];
    std::vector<Json> rows;
    for (const auto& ex : seq) rows.push_back(seq_to_json(ex));
    emit((fs::path(o.out) / ("seq." + std::string(fold) + ".jsonl")).string(),
         dump_jsonl(rows));
    const auto& pairs = pairs_by_fold[fold];
    rows.clear();
    int none = 0, next = 0, iff = 0;
    for (const auto& p : pairs) {
      rows.push_back(pair_to_json(p));
      if (p.label == RelationLabel::None) ++none;
      if (p.label == RelationLabel::Next) ++next;
      if (p.label == RelationLabel::If) ++iff;
    }
    emit((fs::path(o.out) / ("pairs." + std::string(fold) + ".jsonl")).string(),
         dump_jsonl(rows));
    counts[fold] = Json{{"sentences", seq.size()},
                        {"pairs", Json{{"none", none}, {"next", next}, {"if", iff},
                                       {"total", pairs.size()}}}};
  }

  Json manifest;
  manifest["k"] = o.k;
  manifest["portion"] = portion_to_string(portion);
  manifest["seed"] = o.seed;
  manifest["threshold"] = mcfg.threshold;
  manifest["span_min"] = mcfg.span_min;
  manifest["span_max"] = mcfg.span_max;
  manifest["scope"] = o.matcher.scope;
  manifest["splits"] =
      Json{{"train", split.train}, {"dev", split.dev}, {"test", split.test}};
  manifest["counts"] = counts;
  manifest["dropped_edges"] = dropped_edges;
  manifest["match_statuses"] = status_counts;
  manifest["warnings"] = warnings;
  save_json((fs::path(o.out) / "manifest.json").string(), manifest);
  std::cerr << "datasets written under " << o.out << "\n";
}

struct TrainSeqOpts {
  std::string train;
  std::string dev;
  std::string out;
  TrainOpts hyper;
};

void run_train_seq(const TrainSeqOpts& o) {
  require(o.train, "--train");
  require(o.out, "--out");
  check_train_opts(o.hyper);
  auto data = load_seq_file(o.train);
  CrfHyper hyper;
  hyper.l2 = o.hyper.l2;
  hyper.lr = o.hyper.lr;
  hyper.epochs = o.hyper.epochs;
  hyper.batch = o.hyper.batch;
  hyper.seed = o.hyper.seed;
  hyper.parallel = o.hyper.parallel;
  TrainTrace trace;
  CrfModel model = crf_train(data, hyper, o.hyper.trace ? &trace : nullptr);
  if (o.hyper.trace) {
    for (std::size_t i = 0; i < trace.epoch_loss.size(); ++i)
      std::cerr << "epoch " << (i + 1) << " loss " << trace.epoch_loss[i] << "\n";
  }
  save_crf(o.out, model);

  Json summary;
  summary["examples"] = data.size();
  summary["features"] = model.vocab.names.size();
  if (!trace.epoch_loss.empty()) summary["final_loss"] = trace.epoch_loss.back();
  if (!o.dev.empty()) {
    auto dev = load_seq_file(o.dev);
    std::vector<std::vector<std::string>> gold, pred;
    for (const auto& ex : dev) {
      gold.push_back(ex.tags);
      pred.push_back(viterbi(model, ex.tokens));
    }
    summary["dev"] = token_to_json(token_metrics(gold, pred));
  }
  std::cout << summary.dump(2) << "\n";
}

/// The relation trainer standardizes feature scales internally, so it
/// converges at a larger step size and lighter penalty than the labeler.
TrainOpts re_train_defaults() {
  TrainOpts o;
  o.l2 = 0.001;
  o.lr = 1.0;
  o.epochs = 200;
  return o;
}

struct TrainReOpts {
  std::string train;
  std::string embeddings;
  std::string out;
  std::string pooling = "masked-max";
  int k = -1;
  TrainOpts hyper = re_train_defaults();
};

void run_train_re(const TrainReOpts& o) {
  require(o.train, "--train");
  require(o.embeddings, "--embeddings");
  require(o.out, "--out");
  check_train_opts(o.hyper);
  auto data = load_pairs_file(o.train);
  EmbeddingTable emb = load_embeddings_file(o.embeddings);
  ReConfig cfg;
  cfg.pooling = pooling_from_name(o.pooling);
  if (o.k >= 0) {
    cfg.k = o.k;
  } else if (!data.empty()) {
    cfg.k = data.front().u.k;
  }
  for (const auto& p : data) {
    if (p.u.k != cfg.k || p.v.k != cfg.k) {
      std::cerr << "warning: training windows built with k != " << cfg.k << "\n";
      break;
    }
  }
  ReHyper hyper;
  hyper.l2 = o.hyper.l2;
  hyper.lr = o.hyper.lr;
  hyper.epochs = o.hyper.epochs;
  hyper.batch = o.hyper.batch;
  hyper.seed = o.hyper.seed;
  hyper.parallel = o.hyper.parallel;
  TrainTrace trace;
  ReModel model = re_train(data, emb, cfg, hyper, &trace);
  if (o.hyper.trace) {
    for (std::size_t i = 0; i < trace.epoch_loss.size(); ++i)
      std::cerr << "epoch " << (i + 1) << " loss " << trace.epoch_loss[i] << "\n";
  }
  save_re(o.out, model);
  Json summary;
  summary["examples"] = data.size();
  summary["features"] = model.feature_names.size();
  if (!trace.epoch_loss.empty()) summary["final_loss"] = trace.epoch_loss.back();
  std::cout << summary.dump(2) << "\n";
}

struct PredictOpts {
  std::string transcript;
  std::string crf;
  std::string re;
  std::string embeddings;
  std::string spans_out;
  std::string pairs_out;
  int max_distance = -1;
};

void run_predict(const PredictOpts& o) {
  require(o.transcript, "--transcript");
  require(o.crf, "--crf");
  require(o.re, "--re");
  require(o.embeddings, "--embeddings");
  Transcript t = load_transcript_file(o.transcript);
  CrfModel crf = load_crf(o.crf);
  ReModel re = load_re(o.re);
  EmbeddingTable emb = load_embeddings_file(o.embeddings);

  std::vector<TextSpan> spans = run_extract(t, crf);
  std::vector<PairPrediction> preds = run_relate(spans, t, re, emb, o.max_distance);

  std::vector<Json> span_rows;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    span_rows.push_back(Json{{"index", i},
                             {"span", span_to_json(spans[i])},
                             {"text", span_text(t, spans[i])}});
  }
  emit(o.spans_out.empty() ? "-" : o.spans_out, dump_jsonl(span_rows));

  std::vector<Json> pair_rows;
  for (const auto& p : preds) {
    pair_rows.push_back(Json{{"u", p.u},
                             {"v", p.v},
                             {"label", relation_name(p.label)},
                             {"score", p.score},
                             {"scores", Json::array({p.scores[0], p.scores[1], p.scores[2]})}});
  }
  emit(o.pairs_out.empty() ? "-" : o.pairs_out, dump_jsonl(pair_rows));
}

struct AssembleOpts {
  std::string transcript;
  std::string spans;
  std::string pairs;
  std::string format = "dot";
  std::string out = "-";
};

void run_assemble(const AssembleOpts& o) {
  require(o.transcript, "--transcript");
  require(o.spans, "--spans");
  require(o.pairs, "--pairs");
  Transcript t = load_transcript_file(o.transcript);
  std::vector<TextSpan> spans;
  for (const Json& j : read_jsonl_file(o.spans, "predicted spans")) {
    spans.push_back(span_from_json(field(j, "span")));
  }
  std::vector<PairPrediction> preds;
  for (const Json& j : read_jsonl_file(o.pairs, "pair predictions")) {
    PairPrediction p;
    p.u = int_field(j, "u");
    p.v = int_field(j, "v");
    p.label = relation_from_name(str_field(j, "label"));
    p.score = field(j, "score").get<double>();
    preds.push_back(p);
  }
  KnowledgeGraph kg = assemble(t, spans, preds);
  GraphFormat fmt;
  if (o.format == "dot") {
    fmt = GraphFormat::Dot;
  } else if (o.format == "json") {
    fmt = GraphFormat::Json;
  } else {
    throw UsageError("format must be dot or json");
  }
  emit(o.out, export_graph(kg, fmt));
}

struct EvaluateOpts {
  std::string task;
  std::string transcript;
  std::string report;
  std::string gold_spans;
  std::string gold_relations;
  std::string model;
  std::string data;
  std::string embeddings;
  std::string pred_spans;
  std::string pred_pairs;
};

void evaluate_matching_task(const EvaluateOpts& o) {
  require(o.transcript, "--transcript");
  require(o.report, "--report");
  require(o.gold_spans, "--gold-spans");
  Transcript t = load_transcript_file(o.transcript);
  auto gold = load_span_annotations(o.gold_spans);
  std::vector<ReportEntry> report;
  for (const Json& j : read_jsonl_file(o.report, "match report"))
    report.push_back(report_entry_from_json(j));
  MatchingEval ev = evaluate_matching(t, gold, report);
  Json out;
  out["exact"] = mention_to_json(ev.exact);
  out["overlap"] = mention_to_json(ev.overlap);
  out["token"] = token_to_json(ev.token);
  out["phrases_scored"] = ev.phrases_scored;
  out["noisy_gold"] = ev.noisy_gold;
  std::cout << out.dump(2) << "\n";
}

void evaluate_seq_task(const EvaluateOpts& o) {
  require(o.model, "--model");
  require(o.data, "--data");
  CrfModel model = load_crf(o.model);
  auto data = load_seq_file(o.data);
  if (data.empty()) throw DataError("no sequence examples in " + o.data);
  std::vector<std::vector<std::string>> gold, pred;
  std::vector<TextSpan> gold_spans, pred_spans;
  for (std::size_t i = 0; i < data.size(); ++i) {
    gold.push_back(data[i].tags);
    pred.push_back(viterbi(model, data[i].tokens));
    for (auto [s, e] : extract_spans(gold.back()))
      gold_spans.push_back({static_cast<int>(i), s, e});
    for (auto [s, e] : extract_spans(pred.back()))
      pred_spans.push_back({static_cast<int>(i), s, e});
  }
  Json out;
  out["token"] = token_to_json(token_metrics(gold, pred));
  out["mention"] = mention_to_json(mention_metrics(gold_spans, pred_spans));
  std::cout << out.dump(2) << "\n";
}

void evaluate_re_task(const EvaluateOpts& o) {
  require(o.model, "--model");
  require(o.data, "--data");
  require(o.embeddings, "--embeddings");
  ReModel model = load_re(o.model);
  EmbeddingTable emb = load_embeddings_file(o.embeddings);
  auto data = load_pairs_file(o.data);
  if (data.empty()) throw DataError("no pair examples in " + o.data);
  std::vector<RelationLabel> gold, pred;
  for (const auto& p : data) {
    gold.push_back(p.label);
    pred.push_back(re_predict(model, p, emb).label);
  }
  RelationMetrics m = relation_metrics(gold, pred, /*include_none=*/false);
  std::cout << relation_to_json(m).dump(2) << "\n";
}

/// Scores extraction output against gold span/relation annotations. The
/// relation score conditions on the gold span universe: for every ordered
/// pair of annotated phrases, the predicted label is looked up by exact
/// span pair, defaulting to none (so missed spans cost recall).
void evaluate_e2e_task(const EvaluateOpts& o) {
  require(o.pred_spans, "--pred-spans");
  require(o.pred_pairs, "--pred-pairs");
  require(o.gold_spans, "--gold-spans");
  require(o.gold_relations, "--gold-relations");
  auto gold_ann = load_span_annotations(o.gold_spans);
  auto gold_rel = load_relation_annotations(o.gold_relations);

  std::vector<TextSpan> pred_spans;
  for (const Json& j : read_jsonl_file(o.pred_spans, "predicted spans"))
    pred_spans.push_back(span_from_json(field(j, "span")));
  std::map<std::pair<TextSpan, TextSpan>, RelationLabel> pred_pairs;
  for (const Json& j : read_jsonl_file(o.pred_pairs, "pair predictions")) {
    int u = int_field(j, "u");
    int v = int_field(j, "v");
    if (u < 0 || v < 0 || u >= static_cast<int>(pred_spans.size()) ||
        v >= static_cast<int>(pred_spans.size()))
      throw DataError("pair prediction references unknown span index");
    pred_pairs[{pred_spans[static_cast<std::size_t>(u)],
                pred_spans[static_cast<std::size_t>(v)]}] =
        relation_from_name(str_field(j, "label"));
  }

  std::vector<TextSpan> gold_spans;
  std::map<std::string, TextSpan> span_of;
  for (const auto& a : gold_ann) {
    if (!a.gold_span) continue;
    gold_spans.push_back(*a.gold_span);
    span_of[a.phrase_id] = *a.gold_span;
  }
  std::map<std::pair<std::string, std::string>, RelationLabel> gold_edges;
  for (const auto& r : gold_rel) gold_edges[{r.u_phrase, r.v_phrase}] = r.label;

  std::vector<RelationLabel> gold_labels, pred_labels;
  for (const auto& [u_id, u_span] : span_of) {
    for (const auto& [v_id, v_span] : span_of) {
      if (u_id == v_id) continue;
      auto git = gold_edges.find({u_id, v_id});
      gold_labels.push_back(git == gold_edges.end() ? RelationLabel::None : git->second);
      auto pit = pred_pairs.find({u_span, v_span});
      pred_labels.push_back(pit == pred_pairs.end() ? RelationLabel::None : pit->second);
    }
  }
  Json out;
  out["mention"] = mention_to_json(mention_metrics(gold_spans, pred_spans));
  out["relation"] =
      relation_to_json(relation_metrics(gold_labels, pred_labels, /*include_none=*/false));
  std::cout << out.dump(2) << "\n";
}

void run_evaluate(const EvaluateOpts& o) {
  if (o.task == "matching") {
    evaluate_matching_task(o);
  } else if (o.task == "seq") {
    evaluate_seq_task(o);
  } else if (o.task == "re") {
    evaluate_re_task(o);
  } else if (o.task == "e2e") {
    evaluate_e2e_task(o);
  } else {
    throw UsageError("task must be matching, seq, re or e2e");
  }
}

struct SweepOpts {
  std::string corpus;
  std::string embeddings;
  std::string out;
  std::string poolings = "masked-avg,masked-max,unmasked-avg";
  std::string ks = "0,1,2,3";
  std::string portions = "6:3:1,4:2:1,1:1:1";
  int seeds = 5;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 1234;
  TrainOpts hyper = re_train_defaults();
  MatcherOpts matcher;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Grid driver: context sensitivity (K), pooling mode and sampling portion,
/// averaged over training seeds.  Documents are split once; the training
/// fold is resampled per portion and seed, the test fold is scored as-is.
void run_sweep(const SweepOpts& o) {
  require(o.corpus, "--corpus");
  require(o.embeddings, "--embeddings");
  check_train_opts(o.hyper);
  if (o.seeds < 1) throw UsageError("seeds must be at least 1");
  std::vector<std::string> pooling_names = split_csv(o.poolings);
  std::vector<int> ks;
  for (const auto& s : split_csv(o.ks)) ks.push_back(parse_config_value<int>("ks", s));
  std::vector<std::string> portion_names = split_csv(o.portions);
  if (pooling_names.empty() || ks.empty() || portion_names.empty())
    throw UsageError("sweep grid must not be empty");
  for (int k : ks)
    if (k < 0) throw UsageError("k must be non-negative");

  EmbeddingTable emb = load_embeddings_file(o.embeddings);
  MatcherOpts mo = o.matcher;
  mo.parallel = o.hyper.parallel;  // one switch governs both stages
  MatcherConfig mcfg = matcher_config(mo);
  auto docs = scan_corpus(o.corpus);
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.id);
  DocSplit split = split_docs(ids, o.split_seed);
  std::set<std::string> test_ids(split.test.begin(), split.test.end());

  // Match each document once; windows are rebuilt per K.
  std::map<std::string, Transcript> transcripts;
  std::map<std::string, MatchedGraph> matched;
  for (const auto& d : docs) {
    Transcript t = load_transcript_file(d.transcript_path);
    ProtocolGraph g = load_protocol_file(d.protocol_path);
    matched[d.id] = match_protocol(g, t, mcfg, emb);
    transcripts[d.id] = std::move(t);
  }

  std::map<int, std::vector<PairExample>> train_pairs, test_pairs;
  for (int k : ks) {
    for (const auto& d : docs) {
      auto pairs = build_pair_dataset(matched[d.id], transcripts[d.id], k);
      auto& dst = test_ids.count(d.id) ? test_pairs[k] : train_pairs[k];
      dst.insert(dst.end(), pairs.begin(), pairs.end());
    }
    if (train_pairs[k].empty() || test_pairs[k].empty())
      throw DataError("sweep needs non-empty train and test folds");
  }

  Json cells = Json::array();
  std::map<std::string, std::pair<double, double>> table;  // key: pooling|k|portion
  for (const auto& pooling : pooling_names) {
    PoolingMode mode = pooling_from_name(pooling);
    for (int k : ks) {
      for (const auto& portion_name : portion_names) {
        SamplingPortion portion = portion_from_string(portion_name);
        std::vector<double> runs;
        for (int r = 0; r < o.seeds; ++r) {
          std::uint64_t run_seed = o.seed + static_cast<std::uint64_t>(r);
          auto sampled = sample_labels(train_pairs[k], portion, run_seed);
          ReConfig cfg;
          cfg.pooling = mode;
          cfg.k = k;
          ReHyper hyper;
          hyper.l2 = o.hyper.l2;
          hyper.lr = o.hyper.lr;
          hyper.epochs = o.hyper.epochs;
          hyper.batch = o.hyper.batch;
          hyper.seed = run_seed;
          hyper.parallel = o.hyper.parallel;
          ReModel model = re_train(sampled, emb, cfg, hyper);
          std::vector<RelationLabel> gold, pred;
          for (const auto& p : test_pairs[k]) {
            gold.push_back(p.label);
            pred.push_back(re_predict(model, p, emb).label);
          }
          runs.push_back(relation_metrics(gold, pred, /*include_none=*/false).micro_f1);
        }
        auto [mean, std_dev] = aggregate_runs(runs);
        table[pooling + "|" + std::to_string(k) + "|" + portion_name] = {mean, std_dev};
        cells.push_back(Json{{"pooling", pooling},
                             {"k", k},
                             {"portion", portion_name},
                             {"runs", runs},
                             {"mean", mean},
                             {"std", std_dev}});
      }
    }
  }

  std::ostringstream out;
  out << "micro-F1 over ⟨next⟩/⟨if⟩, mean±std over " << o.seeds << " seeds\n";
  for (const auto& portion_name : portion_names) {
    out << "\nportion " << portion_name << "\n";
    out << "model";
    for (int k : ks) out << "\tK=" << k;
    out << "\n";
    for (const auto& pooling : pooling_names) {
      out << pooling;
      for (int k : ks) {
        auto [mean, std_dev] = table[pooling + "|" + std::to_string(k) + "|" + portion_name];
        out << "\t" << format_pct(mean, std_dev);
      }
      out << "\n";
    }
  }
  std::cout << out.str();

  if (!o.out.empty()) {
    Json j;
    j["seeds"] = o.seeds;
    j["seed"] = o.seed;
    j["split_seed"] = o.split_seed;
    j["splits"] = Json{{"train", split.train}, {"dev", split.dev}, {"test", split.test}};
    j["epochs"] = o.hyper.epochs;
    j["cells"] = cells;
    save_json(o.out, j);
  }
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"weak-supervision pipeline: transcripts + protocols -> knowledge graph"};
  app.require_subcommand(1);
  Binder binder;

  std::string config_path;
  app.add_option("--config", config_path,
                 "flat key-value config file (flags override; see docs)");

  MakeFixturesOpts fixture_opts;
  if (const char* env = std::getenv("PKE_FIXTURES")) fixture_opts.out = env;
  auto* cmd_fixtures = app.add_subcommand("make-fixtures", "generate the synthetic corpus");
  cmd_fixtures->add_option("--out", fixture_opts.out, "output directory");
  cmd_fixtures->add_option("--family", fixture_opts.family, "separable | context | both");
  cmd_fixtures->add_option("--docs", fixture_opts.docs, "documents per family");
  cmd_fixtures->add_option("--seed", fixture_opts.seed, "generator seed");
  binder.bind("out", &fixture_opts.out);
  binder.bind("family", &fixture_opts.family);
  binder.bind("docs", &fixture_opts.docs);
  binder.bind("seed", &fixture_opts.seed);

  ParseProtocolOpts parse_opts;
  auto* cmd_parse = app.add_subcommand("parse-protocol", "parse a protocol file to JSON");
  cmd_parse->add_option("--in", parse_opts.in, "protocol text (or JSON) file");
  cmd_parse->add_option("--out", parse_opts.out, "output JSON path, - for stdout");
  cmd_parse->add_flag("--validate", parse_opts.validate, "run structural validation");

  MatchOpts match_opts;
  auto* cmd_match = app.add_subcommand("match", "align protocol phrases to spans");
  cmd_match->add_option("--transcript", match_opts.transcript, "transcript file");
  cmd_match->add_option("--protocol", match_opts.protocol, "protocol file");
  cmd_match->add_option("--embeddings", match_opts.embeddings, "word vector file");
  cmd_match->add_option("--span-vectors", match_opts.span_vectors,
                        "precomputed span/phrase vectors (JSONL)");
  cmd_match->add_option("--out", match_opts.out, "match report JSONL, - for stdout");
  cmd_match->add_option("--method", match_opts.method, "fuzzy | exact");
  add_matcher_opts(cmd_match, match_opts.matcher, binder);
  binder.bind("method", &match_opts.method);

  GenDatasetsOpts gen_opts;
  auto* cmd_gen = app.add_subcommand("gen-datasets", "weak labels -> training files");
  cmd_gen->add_option("--corpus", gen_opts.corpus,
                      "directory of <id>.transcript.txt / <id>.protocol.txt");
  cmd_gen->add_option("--embeddings", gen_opts.embeddings, "word vector file");
  cmd_gen->add_option("--out", gen_opts.out, "output directory");
  cmd_gen->add_option("--k", gen_opts.k, "context window size (sentences each side)");
  cmd_gen->add_option("--portion", gen_opts.portion, "sampling portion none:next:if");
  cmd_gen->add_option("--seed", gen_opts.seed, "split + sampling seed");
  cmd_gen->add_option("--train-frac", gen_opts.train_frac, "train fraction of documents");
  cmd_gen->add_option("--dev-frac", gen_opts.dev_frac, "dev fraction of documents");
  add_matcher_opts(cmd_gen, gen_opts.matcher, binder);
  binder.bind("k", &gen_opts.k);
  binder.bind("portion", &gen_opts.portion);
  binder.bind("seed", &gen_opts.seed);
  binder.bind("train-frac", &gen_opts.train_frac);
  binder.bind("dev-frac", &gen_opts.dev_frac);

  TrainSeqOpts seq_opts;
  auto* cmd_seq = app.add_subcommand("train-seq", "train the span labeler");
  cmd_seq->add_option("--train", seq_opts.train, "training JSONL (tagged sentences)");
  cmd_seq->add_option("--dev", seq_opts.dev, "optional dev JSONL for reporting");
  cmd_seq->add_option("--out", seq_opts.out, "model output path");
  add_train_opts(cmd_seq, seq_opts.hyper, binder);

  TrainReOpts re_opts;
  auto* cmd_re = app.add_subcommand("train-re", "train the relation classifier");
  cmd_re->add_option("--train", re_opts.train, "training JSONL (span pairs)");
  cmd_re->add_option("--embeddings", re_opts.embeddings, "word vector file");
  cmd_re->add_option("--out", re_opts.out, "model output path");
  cmd_re->add_option("--pooling", re_opts.pooling,
                     "masked-avg | masked-max | unmasked-avg");
  cmd_re->add_option("--k", re_opts.k, "context size recorded in the model (-1: from data)");
  add_train_opts(cmd_re, re_opts.hyper, binder);
  binder.bind("pooling", &re_opts.pooling);

  PredictOpts predict_opts;
  auto* cmd_predict = app.add_subcommand("predict", "extract spans + classify pairs");
  cmd_predict->add_option("--transcript", predict_opts.transcript, "transcript file");
  cmd_predict->add_option("--crf", predict_opts.crf, "span labeler model");
  cmd_predict->add_option("--re", predict_opts.re, "relation model");
  cmd_predict->add_option("--embeddings", predict_opts.embeddings, "word vector file");
  cmd_predict->add_option("--spans-out", predict_opts.spans_out, "span JSONL output");
  cmd_predict->add_option("--pairs-out", predict_opts.pairs_out, "pair JSONL output");
  cmd_predict->add_option("--max-distance", predict_opts.max_distance,
                          "max sentence distance for pairs (-1: unlimited)");
  binder.bind("max-distance", &predict_opts.max_distance);

  AssembleOpts assemble_opts;
  auto* cmd_assemble = app.add_subcommand("assemble", "predictions -> graph export");
  cmd_assemble->add_option("--transcript", assemble_opts.transcript, "transcript file");
  cmd_assemble->add_option("--spans", assemble_opts.spans, "span JSONL from predict");
  cmd_assemble->add_option("--pairs", assemble_opts.pairs, "pair JSONL from predict");
  cmd_assemble->add_option("--format", assemble_opts.format, "dot | json");
  cmd_assemble->add_option("--out", assemble_opts.out, "output path, - for stdout");
  binder.bind("format", &assemble_opts.format);

  EvaluateOpts eval_opts;
  auto* cmd_eval = app.add_subcommand("evaluate", "score a pipeline stage");
  cmd_eval->add_option("--task", eval_opts.task, "matching | seq | re | e2e");
  cmd_eval->add_option("--transcript", eval_opts.transcript, "transcript file");
  cmd_eval->add_option("--report", eval_opts.report, "match report JSONL");
  cmd_eval->add_option("--gold-spans", eval_opts.gold_spans, "span annotations JSONL");
  cmd_eval->add_option("--gold-relations", eval_opts.gold_relations,
                       "relation annotations JSONL");
  cmd_eval->add_option("--model", eval_opts.model, "model path (seq/re)");
  cmd_eval->add_option("--data", eval_opts.data, "labeled data JSONL (seq/re)");
  cmd_eval->add_option("--embeddings", eval_opts.embeddings, "word vector file (re)");
  cmd_eval->add_option("--pred-spans", eval_opts.pred_spans, "predicted spans JSONL (e2e)");
  cmd_eval->add_option("--pred-pairs", eval_opts.pred_pairs, "pair predictions JSONL (e2e)");

  SweepOpts sweep_opts;
  auto* cmd_sweep = app.add_subcommand("sweep", "pooling × K × portion ablation grid");
  cmd_sweep->add_option("--corpus", sweep_opts.corpus, "corpus directory");
  cmd_sweep->add_option("--embeddings", sweep_opts.embeddings, "word vector file");
  cmd_sweep->add_option("--out", sweep_opts.out, "cell JSON output path");
  cmd_sweep->add_option("--poolings", sweep_opts.poolings, "comma-separated pooling modes");
  cmd_sweep->add_option("--ks", sweep_opts.ks, "comma-separated K values");
  cmd_sweep->add_option("--portions", sweep_opts.portions, "comma-separated portions");
  cmd_sweep->add_option("--seeds", sweep_opts.seeds, "number of training seeds");
  cmd_sweep->add_option("--seed", sweep_opts.seed, "base training seed");
  cmd_sweep->add_option("--split-seed", sweep_opts.split_seed, "document split seed");
  add_train_opts(cmd_sweep, sweep_opts.hyper, binder, /*with_seed=*/false);
  add_matcher_opts(cmd_sweep, sweep_opts.matcher, binder, /*with_parallel=*/false);
  binder.bind("seed", &sweep_opts.seed);
  binder.bind("seeds", &sweep_opts.seeds);
  binder.bind("split-seed", &sweep_opts.split_seed);

  // Config file first, then environment, then flags (parsed last, wins).
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    }
  }
  if (!config_path.empty()) binder.apply(load_flat_config(config_path));
  if (const char* env = std::getenv("PKE_SEED")) binder.apply_one("seed", env);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (cmd_fixtures->parsed()) run_make_fixtures(fixture_opts);
  if (cmd_parse->parsed()) run_parse_protocol(parse_opts);
  if (cmd_match->parsed()) run_match(match_opts);
  if (cmd_gen->parsed()) run_gen_datasets(gen_opts);
  if (cmd_seq->parsed()) run_train_seq(seq_opts);
  if (cmd_re->parsed()) run_train_re(re_opts);
  if (cmd_predict->parsed()) run_predict(predict_opts);
  if (cmd_assemble->parsed()) run_assemble(assemble_opts);
  if (cmd_eval->parsed()) run_evaluate(eval_opts);
  if (cmd_sweep->parsed()) run_sweep(sweep_opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
