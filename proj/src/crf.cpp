#include "pke/crf.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pke {

int iobes_index(const std::string& tag) {
  for (std::size_t i = 0; i < kIobesTags.size(); ++i) {
    if (tag == kIobesTags[i]) return static_cast<int>(i);
  }
  throw DataError("unknown IOBES tag: '" + tag + "'");
}

double log_sum_exp(const double* xs, int n) {
  double hi = xs[0];
  for (int i = 1; i < n; ++i) hi = std::max(hi, xs[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(xs[i] - hi);
  return hi + std::log(s);
}

LatticeMarginals forward_backward(const LatticeScores& s) {
  int L = s.length;
  int T = s.num_tags;
  int S = s.start_state();
  int P = s.stop_state();
  std::vector<double> alpha(static_cast<std::size_t>(L * T));
  std::vector<double> beta(static_cast<std::size_t>(L * T));
  std::vector<double> tmp(static_cast<std::size_t>(T));

  for (int y = 0; y < T; ++y) alpha[static_cast<std::size_t>(y)] = s.tr(S, y) + s.e(0, y);
  for (int t = 1; t < L; ++t) {
    for (int y = 0; y < T; ++y) {
      for (int a = 0; a < T; ++a) {
        tmp[static_cast<std::size_t>(a)] =
            alpha[static_cast<std::size_t>((t - 1) * T + a)] + s.tr(a, y);
      }
      alpha[static_cast<std::size_t>(t * T + y)] = log_sum_exp(tmp.data(), T) + s.e(t, y);
    }
  }
  for (int y = 0; y < T; ++y) {
    beta[static_cast<std::size_t>((L - 1) * T + y)] = s.tr(y, P);
  }
  for (int t = L - 2; t >= 0; --t) {
    for (int y = 0; y < T; ++y) {
      for (int b = 0; b < T; ++b) {
        tmp[static_cast<std::size_t>(b)] = s.tr(y, b) + s.e(t + 1, b) +
                                           beta[static_cast<std::size_t>((t + 1) * T + b)];
      }
      beta[static_cast<std::size_t>(t * T + y)] = log_sum_exp(tmp.data(), T);
    }
  }
  for (int y = 0; y < T; ++y) {
    tmp[static_cast<std::size_t>(y)] =
        alpha[static_cast<std::size_t>((L - 1) * T + y)] + s.tr(y, P);
  }
  LatticeMarginals out;
  out.log_z = log_sum_exp(tmp.data(), T);
  out.node.resize(static_cast<std::size_t>(L * T));
  for (int t = 0; t < L; ++t) {
    for (int y = 0; y < T; ++y) {
      out.node[static_cast<std::size_t>(t * T + y)] =
          std::exp(alpha[static_cast<std::size_t>(t * T + y)] +
                   beta[static_cast<std::size_t>(t * T + y)] - out.log_z);
    }
  }
  if (L > 1) {
    out.edge.resize(static_cast<std::size_t>((L - 1) * T * T));
    for (int t = 0; t + 1 < L; ++t) {
      for (int a = 0; a < T; ++a) {
        for (int b = 0; b < T; ++b) {
          out.edge[static_cast<std::size_t>((t * T + a) * T + b)] =
              std::exp(alpha[static_cast<std::size_t>(t * T + a)] + s.tr(a, b) +
                       s.e(t + 1, b) + beta[static_cast<std::size_t>((t + 1) * T + b)] -
                       out.log_z);
        }
      }
    }
  }
  return out;
}

std::vector<int> viterbi_path(const LatticeScores& s) {
  int L = s.length;
  int T = s.num_tags;
  std::vector<double> delta(static_cast<std::size_t>(L * T));
  std::vector<int> back(static_cast<std::size_t>(L * T), -1);
  for (int y = 0; y < T; ++y) {
    delta[static_cast<std::size_t>(y)] = s.tr(s.start_state(), y) + s.e(0, y);
  }
  for (int t = 1; t < L; ++t) {
    for (int y = 0; y < T; ++y) {
      // Strict > keeps the lowest previous tag on ties.
      double best = delta[static_cast<std::size_t>((t - 1) * T)] + s.tr(0, y);
      int arg = 0;
      for (int a = 1; a < T; ++a) {
        double v = delta[static_cast<std::size_t>((t - 1) * T + a)] + s.tr(a, y);
        if (v > best) {
          best = v;
          arg = a;
        }
      }
      delta[static_cast<std::size_t>(t * T + y)] = best + s.e(t, y);
      back[static_cast<std::size_t>(t * T + y)] = arg;
    }
  }
  double best = delta[static_cast<std::size_t>((L - 1) * T)] + s.tr(0, s.stop_state());
  int arg = 0;
  for (int y = 1; y < T; ++y) {
    double v = delta[static_cast<std::size_t>((L - 1) * T + y)] + s.tr(y, s.stop_state());
    if (v > best) {
      best = v;
      arg = y;
    }
  }
  std::vector<int> path(static_cast<std::size_t>(L));
  path[static_cast<std::size_t>(L - 1)] = arg;
  for (int t = L - 1; t > 0; --t) {
    arg = back[static_cast<std::size_t>(t * T + arg)];
    path[static_cast<std::size_t>(t - 1)] = arg;
  }
  return path;
}

double path_score(const LatticeScores& s, const std::vector<int>& tags) {
  if (static_cast<int>(tags.size()) != s.length) {
    throw UsageError("path_score: tag count does not match lattice length");
  }
  double score = s.tr(s.start_state(), tags[0]);
  for (int t = 0; t < s.length; ++t) {
    score += s.e(t, tags[static_cast<std::size_t>(t)]);
    if (t > 0) score += s.tr(tags[static_cast<std::size_t>(t - 1)], tags[static_cast<std::size_t>(t)]);
  }
  score += s.tr(tags[static_cast<std::size_t>(s.length - 1)], s.stop_state());
  return score;
}

int FeatureVocab::add(const std::string& name) {
  auto [it, inserted] = index.try_emplace(name, static_cast<int>(names.size()));
  if (inserted) names.push_back(name);
  return it->second;
}

int FeatureVocab::find(const std::string& name) const {
  auto it = index.find(name);
  return it == index.end() ? -1 : it->second;
}

namespace {

std::string word_shape(const std::string& tok) {
  std::string shape;
  shape.reserve(tok.size());
  for (char c : tok) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x80) {
      shape += 'u';
    } else if (c >= 'A' && c <= 'Z') {
      shape += 'X';
    } else if (c >= 'a' && c <= 'z') {
      shape += 'x';
    } else if (is_ascii_digit(c)) {
      shape += 'd';
    } else {
      shape += 'p';
    }
  }
  return shape;
}

std::string word_at(const std::vector<std::string>& tokens, int i) {
  if (i < 0) return "<BOS>";
  if (i >= static_cast<int>(tokens.size())) return "<EOS>";
  return lower_copy(tokens[static_cast<std::size_t>(i)]);
}

}  // namespace

std::vector<std::string> extract_features(const std::vector<std::string>& tokens, int i) {
  int n = static_cast<int>(tokens.size());
  if (i < 0 || i >= n) throw UsageError("extract_features: position out of range");
  static const char* kOffsetNames[5] = {"w-2=", "w-1=", "w0=", "w+1=", "w+2="};
  std::vector<std::string> out;
  out.reserve(16);
  for (int off = -2; off <= 2; ++off) {
    out.push_back(kOffsetNames[off + 2] + word_at(tokens, i + off));
  }
  const std::string& raw = tokens[static_cast<std::size_t>(i)];
  out.push_back("shape0=" + word_shape(raw));
  std::string low = lower_copy(raw);
  for (std::size_t k = 1; k <= 3 && k <= low.size(); ++k) {
    out.push_back("pre" + std::to_string(k) + "=" + low.substr(0, k));
    out.push_back("suf" + std::to_string(k) + "=" + low.substr(low.size() - k));
  }
  out.push_back("bi=" + word_at(tokens, i - 1) + "|" + low);
  const char* bucket;
  if (i == 0) {
    bucket = "first";
  } else if (i == n - 1) {
    bucket = "last";
  } else {
    int third = 3 * i / n;
    bucket = third == 0 ? "early" : (third == 1 ? "mid" : "late");
  }
  out.push_back(std::string("pos=") + bucket);
  return out;
}

double CrfModel::get_param(std::size_t i) const {
  return i < emission.size() ? emission[i] : transition[i - emission.size()];
}

void CrfModel::set_param(std::size_t i, double v) {
  if (i < emission.size()) {
    emission[i] = v;
  } else {
    transition[i - emission.size()] = v;
  }
}

LatticeScores CrfModel::scores(const std::vector<std::vector<int>>& feats) const {
  LatticeScores s;
  s.length = static_cast<int>(feats.size());
  s.num_tags = num_tags;
  s.emit.assign(static_cast<std::size_t>(s.length * num_tags), 0.0);
  s.trans = transition;
  for (int t = 0; t < s.length; ++t) {
    for (int f : feats[static_cast<std::size_t>(t)]) {
      const double* row = &emission[static_cast<std::size_t>(f * num_tags)];
      double* dst = &s.emit[static_cast<std::size_t>(t * num_tags)];
      for (int y = 0; y < num_tags; ++y) dst[y] += row[y];
    }
  }
  return s;
}

FeatureVocab fit_vocab(const std::vector<SeqExample>& data) {
  FeatureVocab vocab;
  for (const SeqExample& ex : data) {
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      for (const std::string& f : extract_features(ex.tokens, static_cast<int>(i))) {
        vocab.add(f);
      }
    }
  }
  return vocab;
}

IndexedSeq index_example(const FeatureVocab& vocab, const SeqExample& ex) {
  IndexedSeq out;
  out.feats.resize(ex.tokens.size());
  for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
    for (const std::string& f : extract_features(ex.tokens, static_cast<int>(i))) {
      int idx = vocab.find(f);
      if (idx >= 0) out.feats[i].push_back(idx);
    }
  }
  if (!ex.tags.empty()) {
    if (ex.tags.size() != ex.tokens.size()) {
      throw DataError("example in " + ex.doc + " sentence " + std::to_string(ex.sent_index) +
                      ": tag/token count mismatch");
    }
    for (const std::string& tag : ex.tags) out.tags.push_back(iobes_index(tag));
  }
  return out;
}

namespace {

// Adds the example's negative-log-likelihood gradient into acc (flat layout:
// emission block then transition block) and returns -log p(y|x).
double accumulate_example(const CrfModel& m, const IndexedSeq& ex, std::vector<double>& acc) {
  int L = static_cast<int>(ex.feats.size());
  int T = m.num_tags;
  int W = T + 2;
  LatticeScores s = m.scores(ex.feats);
  LatticeMarginals marg = forward_backward(s);
  std::size_t trans_base = m.emission.size();

  for (int t = 0; t < L; ++t) {
    int gold = ex.tags[static_cast<std::size_t>(t)];
    for (int f : ex.feats[static_cast<std::size_t>(t)]) {
      double* row = &acc[static_cast<std::size_t>(f * T)];
      for (int y = 0; y < T; ++y) {
        row[y] += marg.node[static_cast<std::size_t>(t * T + y)];
      }
      row[gold] -= 1.0;
    }
  }
  int S = s.start_state();
  int P = s.stop_state();
  for (int y = 0; y < T; ++y) {
    acc[trans_base + static_cast<std::size_t>(S * W + y)] +=
        marg.node[static_cast<std::size_t>(y)];
    acc[trans_base + static_cast<std::size_t>(y * W + P)] +=
        marg.node[static_cast<std::size_t>((L - 1) * T + y)];
  }
  acc[trans_base + static_cast<std::size_t>(S * W + ex.tags[0])] -= 1.0;
  acc[trans_base + static_cast<std::size_t>(ex.tags[static_cast<std::size_t>(L - 1)] * W + P)] -= 1.0;
  for (int t = 0; t + 1 < L; ++t) {
    for (int a = 0; a < T; ++a) {
      for (int b = 0; b < T; ++b) {
        acc[trans_base + static_cast<std::size_t>(a * W + b)] +=
            marg.edge[static_cast<std::size_t>((t * T + a) * T + b)];
      }
    }
    acc[trans_base +
        static_cast<std::size_t>(ex.tags[static_cast<std::size_t>(t)] * W +
                                 ex.tags[static_cast<std::size_t>(t + 1)])] -= 1.0;
  }
  return marg.log_z - path_score(s, ex.tags);
}

constexpr std::size_t kGradBlock = 64;  // examples per reduction block
constexpr std::size_t kGradSlots = 8;   // block buffers alive at once

double finalize_loss_grad(const CrfModel& m, double data_loss, std::size_t n, double l2,
                          std::vector<double>& grad) {
  double sq = 0.0;
  std::size_t count = m.param_count();
  double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < count; ++i) {
    double w = m.get_param(i);
    sq += w * w;
    grad[i] = (grad[i] + l2 * w) * inv_n;
  }
  return (data_loss + 0.5 * l2 * sq) * inv_n;
}

}  // namespace

double crf_loss_grad_serial(const CrfModel& m, const std::vector<IndexedSeq>& data, double l2,
                            std::vector<double>& grad) {
  if (data.empty()) throw DataError("crf loss: empty dataset");
  grad.assign(m.param_count(), 0.0);
  double loss = 0.0;
  for (const IndexedSeq& ex : data) loss += accumulate_example(m, ex, grad);
  return finalize_loss_grad(m, loss, data.size(), l2, grad);
}

double crf_loss_grad_parallel(const CrfModel& m, const std::vector<IndexedSeq>& data, double l2,
                              std::vector<double>& grad) {
  if (data.empty()) throw DataError("crf loss: empty dataset");
  std::size_t n = data.size();
  std::size_t param = m.param_count();
  grad.assign(param, 0.0);
  std::size_t blocks = (n + kGradBlock - 1) / kGradBlock;
  std::vector<std::vector<double>> bufs(std::min(kGradSlots, blocks));
  std::vector<double> losses(bufs.size());
  double loss = 0.0;
  for (std::size_t wave = 0; wave < blocks; wave += bufs.size()) {
    std::size_t in_wave = std::min(bufs.size(), blocks - wave);
    // Blocks are independent; any thread may take any block because each
    // writes its own slot. The fold below runs in fixed block order, so the
    // result is identical for every thread count.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (long slot = 0; slot < static_cast<long>(in_wave); ++slot) {
      std::size_t b = wave + static_cast<std::size_t>(slot);
      std::vector<double>& buf = bufs[static_cast<std::size_t>(slot)];
      buf.assign(param, 0.0);
      double block_loss = 0.0;
      std::size_t lo = b * kGradBlock;
      std::size_t hi = std::min(n, lo + kGradBlock);
      for (std::size_t i = lo; i < hi; ++i) {
        block_loss += accumulate_example(m, data[i], buf);
      }
      losses[static_cast<std::size_t>(slot)] = block_loss;
    }
    for (std::size_t slot = 0; slot < in_wave; ++slot) {
      const std::vector<double>& buf = bufs[slot];
      for (std::size_t i = 0; i < param; ++i) grad[i] += buf[i];
      loss += losses[slot];
    }
  }
  return finalize_loss_grad(m, loss, n, l2, grad);
}

double crf_loss_grad(const CrfModel& m, const std::vector<IndexedSeq>& data, double l2,
                     std::vector<double>& grad, bool parallel) {
  return parallel ? crf_loss_grad_parallel(m, data, l2, grad)
                  : crf_loss_grad_serial(m, data, l2, grad);
}

double crf_loss(const CrfModel& m, const std::vector<IndexedSeq>& data, double l2) {
  std::vector<double> grad;
  return crf_loss_grad_parallel(m, data, l2, grad);
}

CrfModel crf_train(const std::vector<SeqExample>& data, const CrfHyper& hyper,
                   TrainTrace* trace) {
  if (data.empty()) throw DataError("crf_train: empty dataset");
  for (const SeqExample& ex : data) {
    if (ex.tokens.empty()) continue;
    if (!is_valid_iobes(ex.tags)) {
      throw DataError("crf_train: invalid IOBES tags in " + ex.doc + " sentence " +
                      std::to_string(ex.sent_index));
    }
    if (ex.tags.size() != ex.tokens.size()) {
      throw DataError("crf_train: tag/token mismatch in " + ex.doc + " sentence " +
                      std::to_string(ex.sent_index));
    }
  }
  CrfModel m;
  std::vector<SeqExample> usable;
  for (const SeqExample& ex : data) {
    if (!ex.tokens.empty()) usable.push_back(ex);
  }
  if (usable.empty()) throw DataError("crf_train: no non-empty sentences");
  m.vocab = fit_vocab(usable);
  m.emission.assign(m.vocab.size() * static_cast<std::size_t>(m.num_tags), 0.0);
  m.transition.assign(static_cast<std::size_t>((m.num_tags + 2) * (m.num_tags + 2)), 0.0);

  std::vector<IndexedSeq> indexed;
  indexed.reserve(usable.size());
  for (const SeqExample& ex : usable) indexed.push_back(index_example(m.vocab, ex));

  std::size_t n = indexed.size();
  int batch = std::max(1, hyper.batch);
  Rng rng(hyper.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> grad;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    double lr = hyper.lr / std::sqrt(static_cast<double>(epoch));
    rng.shuffle(order);
    for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(batch)) {
      std::size_t hi = std::min(n, lo + static_cast<std::size_t>(batch));
      grad.assign(m.param_count(), 0.0);
      for (std::size_t i = lo; i < hi; ++i) accumulate_example(m, indexed[order[i]], grad);
      double inv_b = 1.0 / static_cast<double>(hi - lo);
      double reg = hyper.l2 / static_cast<double>(n);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        double g = grad[i] * inv_b + reg * m.get_param(i);
        m.set_param(i, m.get_param(i) - lr * g);
      }
    }
    if (trace) trace->epoch_loss.push_back(crf_loss_grad(m, indexed, hyper.l2, grad, hyper.parallel));
  }
  return m;
}

std::vector<std::string> viterbi(const CrfModel& m, const std::vector<std::string>& tokens) {
  if (tokens.empty()) return {};
  std::vector<std::vector<int>> feats(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const std::string& f : extract_features(tokens, static_cast<int>(i))) {
      int idx = m.vocab.find(f);
      if (idx >= 0) feats[i].push_back(idx);
    }
  }
  std::vector<int> path = viterbi_path(m.scores(feats));
  std::vector<std::string> tags;
  tags.reserve(path.size());
  for (int y : path) tags.push_back(kIobesTags[static_cast<std::size_t>(y)]);
  return tags;
}

std::vector<std::pair<int, int>> extract_spans(const std::vector<std::string>& tags) {
  std::vector<std::pair<int, int>> out;
  int open = -1;   // start of an open segment
  int last = -1;   // last member of the open segment
  auto close_open = [&] {
    if (open >= 0) {
      out.push_back({open, last + 1});
      open = -1;
    }
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const std::string& tag = tags[static_cast<std::size_t>(i)];
    if (tag == "B") {
      close_open();
      open = i;
      last = i;
    } else if (tag == "I") {
      if (open < 0) open = i;  // orphan I starts a segment
      last = i;
    } else if (tag == "E") {
      if (open < 0) {
        out.push_back({i, i + 1});  // orphan E: singleton
      } else {
        last = i;
        close_open();
      }
    } else if (tag == "S") {
      close_open();
      out.push_back({i, i + 1});
    } else {  // O or anything unknown
      close_open();
    }
  }
  close_open();
  return out;
}

}  // namespace pke
