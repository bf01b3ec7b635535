#include "pke/relation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pke {

const char* pooling_name(PoolingMode mode) {
  switch (mode) {
    case PoolingMode::MaskedAvg: return "masked-avg";
    case PoolingMode::MaskedMax: return "masked-max";
    case PoolingMode::UnmaskedAvg: return "unmasked-avg";
  }
  return "masked-max";
}

PoolingMode pooling_from_name(const std::string& name) {
  if (name == "masked-avg") return PoolingMode::MaskedAvg;
  if (name == "masked-max") return PoolingMode::MaskedMax;
  if (name == "unmasked-avg") return PoolingMode::UnmaskedAvg;
  throw DataError("unknown pooling mode: " + name);
}

Vector masked_pool(const ContextWindow& w, const EmbeddingTable& emb, PoolingMode mode,
                   std::vector<std::string>* diags) {
  Vector out(static_cast<std::size_t>(emb.dim), 0.0);
  int known = 0;
  auto fold = [&](const std::vector<std::string>& tokens) {
    for (const std::string& tok : tokens) {
      const Vector* row = emb.find(tok);
      if (!row) continue;
      if (mode == PoolingMode::MaskedMax) {
        if (known == 0) {
          out = *row;
        } else {
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], (*row)[i]);
        }
      } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*row)[i];
      }
      ++known;
    }
  };
  if (mode == PoolingMode::UnmaskedAvg) {
    for (const ContextSentence& s : w.left) fold(s.tokens);
    fold(w.span_tokens);
    for (const ContextSentence& s : w.right) fold(s.tokens);
  } else {
    fold(w.span_tokens);  // masking: context sentences never contribute
  }
  if (known == 0) {
    if (diags) {
      diags->push_back("window at sentence " + std::to_string(w.span.sent_index) + " of " +
                       w.doc + ": no in-vocabulary tokens, pooled to zero");
    }
    return out;
  }
  if (mode != PoolingMode::MaskedMax) {
    for (double& v : out) v /= known;
  }
  return out;
}

int pair_feature_count(int dim, const ReConfig& cfg) {
  return 4 * dim + 3 * cfg.position_buckets + 1;
}

std::vector<std::string> pair_feature_names(int dim, const ReConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(pair_feature_count(dim, cfg)));
  for (const char* block : {"u", "v", "absdiff", "prod"}) {
    for (int i = 0; i < dim; ++i) {
      names.push_back(std::string(block) + "[" + std::to_string(i) + "]");
    }
  }
  int half = cfg.position_buckets / 2;
  for (const char* block : {"upos", "vpos", "dist"}) {
    for (int i = 0; i < cfg.position_buckets; ++i) {
      names.push_back(std::string(block) + "[" + std::to_string(i - half) + "]");
    }
  }
  names.push_back("overlap");
  return names;
}

namespace {

void position_histogram(const std::vector<int>& positions, int buckets, double* out) {
  int half = buckets / 2;
  for (int p : positions) {
    int b = std::max(-half, std::min(half, p)) + half;
    out[b] += 1.0;
  }
  if (!positions.empty()) {
    for (int i = 0; i < buckets; ++i) out[i] /= static_cast<double>(positions.size());
  }
}

double span_overlap(const ContextWindow& u, const ContextWindow& v) {
  std::set<std::string> a, b;
  for (const std::string& t : u.span_tokens) a.insert(lower_copy(t));
  for (const std::string& t : v.span_tokens) b.insert(lower_copy(t));
  if (a.empty() && b.empty()) return 0.0;
  int inter = 0;
  for (const std::string& t : a) inter += b.count(t) > 0 ? 1 : 0;
  int uni = static_cast<int>(a.size() + b.size()) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

}  // namespace

std::vector<double> pair_features(const PairExample& p, const EmbeddingTable& emb,
                                  const ReConfig& cfg) {
  int d = emb.dim;
  std::vector<double> out(static_cast<std::size_t>(pair_feature_count(d, cfg)), 0.0);
  Vector u = masked_pool(p.u, emb, cfg.pooling);
  Vector v = masked_pool(p.v, emb, cfg.pooling);
  for (int i = 0; i < d; ++i) {
    std::size_t si = static_cast<std::size_t>(i);
    out[si] = u[si];
    out[static_cast<std::size_t>(d + i)] = v[si];
    out[static_cast<std::size_t>(2 * d + i)] = std::abs(u[si] - v[si]);
    out[static_cast<std::size_t>(3 * d + i)] = u[si] * v[si];
  }
  int b = cfg.position_buckets;
  position_histogram(p.u_positions, b, &out[static_cast<std::size_t>(4 * d)]);
  position_histogram(p.v_positions, b, &out[static_cast<std::size_t>(4 * d + b)]);
  int delta = p.v.span.sent_index - p.u.span.sent_index;
  int half = b / 2;
  int bucket = std::max(-half, std::min(half, delta)) + half;
  out[static_cast<std::size_t>(4 * d + 2 * b + bucket)] = 1.0;
  out[static_cast<std::size_t>(4 * d + 3 * b)] = span_overlap(p.u, p.v);
  return out;
}

namespace {

constexpr int kNumLabels = 3;

void softmax3(const double* z, double* p) {
  double hi = std::max(z[0], std::max(z[1], z[2]));
  double s = 0.0;
  for (int c = 0; c < kNumLabels; ++c) {
    p[c] = std::exp(z[c] - hi);
    s += p[c];
  }
  for (int c = 0; c < kNumLabels; ++c) p[c] /= s;
}

void scores_for(const std::vector<double>& weights, const std::vector<double>& phi,
                double* z) {
  std::size_t f = phi.size();  // bias row sits at index f
  z[0] = weights[f * 3];
  z[1] = weights[f * 3 + 1];
  z[2] = weights[f * 3 + 2];
  for (std::size_t i = 0; i < f; ++i) {
    double x = phi[i];
    if (x == 0.0) continue;
    z[0] += weights[i * 3] * x;
    z[1] += weights[i * 3 + 1] * x;
    z[2] += weights[i * 3 + 2] * x;
  }
}

// -log softmax(w·phi)[y], gradient added to acc.
double accumulate_pair(const std::vector<double>& weights, const std::vector<double>& phi,
                       int label, std::vector<double>& acc) {
  double z[kNumLabels];
  double p[kNumLabels];
  scores_for(weights, phi, z);
  softmax3(z, p);
  std::size_t f = phi.size();
  for (int c = 0; c < kNumLabels; ++c) {
    double coef = p[c] - (c == label ? 1.0 : 0.0);
    if (coef == 0.0) continue;
    for (std::size_t i = 0; i < f; ++i) {
      if (phi[i] != 0.0) acc[i * 3 + static_cast<std::size_t>(c)] += coef * phi[i];
    }
    acc[f * 3 + static_cast<std::size_t>(c)] += coef;  // bias
  }
  return -std::log(std::max(p[label], 1e-300));
}

constexpr std::size_t kGradBlock = 64;
constexpr std::size_t kGradSlots = 8;

double finalize(const std::vector<double>& weights, double data_loss, std::size_t n,
                double l2, std::vector<double>& grad) {
  double sq = 0.0;
  double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sq += weights[i] * weights[i];
    grad[i] = (grad[i] + l2 * weights[i]) * inv_n;
  }
  return (data_loss + 0.5 * l2 * sq) * inv_n;
}

}  // namespace

double re_loss_grad_serial(const std::vector<double>& weights,
                           const std::vector<std::vector<double>>& feats,
                           const std::vector<int>& labels, double l2,
                           std::vector<double>& grad) {
  if (feats.empty()) throw DataError("re loss: empty dataset");
  grad.assign(weights.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    loss += accumulate_pair(weights, feats[i], labels[i], grad);
  }
  return finalize(weights, loss, feats.size(), l2, grad);
}

double re_loss_grad_parallel(const std::vector<double>& weights,
                             const std::vector<std::vector<double>>& feats,
                             const std::vector<int>& labels, double l2,
                             std::vector<double>& grad) {
  if (feats.empty()) throw DataError("re loss: empty dataset");
  std::size_t n = feats.size();
  grad.assign(weights.size(), 0.0);
  std::size_t blocks = (n + kGradBlock - 1) / kGradBlock;
  std::vector<std::vector<double>> bufs(std::min(kGradSlots, blocks));
  std::vector<double> losses(bufs.size());
  double loss = 0.0;
  for (std::size_t wave = 0; wave < blocks; wave += bufs.size()) {
    std::size_t in_wave = std::min(bufs.size(), blocks - wave);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (long slot = 0; slot < static_cast<long>(in_wave); ++slot) {
      std::size_t b = wave + static_cast<std::size_t>(slot);
      std::vector<double>& buf = bufs[static_cast<std::size_t>(slot)];
      buf.assign(weights.size(), 0.0);
      double block_loss = 0.0;
      std::size_t lo = b * kGradBlock;
      std::size_t hi = std::min(n, lo + kGradBlock);
      for (std::size_t i = lo; i < hi; ++i) {
        block_loss += accumulate_pair(weights, feats[i], labels[i], buf);
      }
      losses[static_cast<std::size_t>(slot)] = block_loss;
    }
    for (std::size_t slot = 0; slot < in_wave; ++slot) {
      const std::vector<double>& buf = bufs[slot];
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += buf[i];
      loss += losses[slot];
    }
  }
  return finalize(weights, loss, n, l2, grad);
}

double re_loss_grad(const std::vector<double>& weights,
                    const std::vector<std::vector<double>>& feats,
                    const std::vector<int>& labels, double l2, std::vector<double>& grad,
                    bool parallel) {
  return parallel ? re_loss_grad_parallel(weights, feats, labels, l2, grad)
                  : re_loss_grad_serial(weights, feats, labels, l2, grad);
}

ReModel re_train(const std::vector<PairExample>& data, const EmbeddingTable& emb,
                 const ReConfig& cfg, const ReHyper& hyper, TrainTrace* trace) {
  if (data.empty()) throw DataError("re_train: empty dataset");
  std::set<int> distinct;
  for (const PairExample& p : data) distinct.insert(static_cast<int>(p.label));
  if (distinct.size() < 2) {
    throw DataError("re_train: need at least 2 distinct labels, got " +
                    std::to_string(distinct.size()));
  }

  ReModel m;
  m.config = cfg;
  m.dim = emb.dim;
  m.feature_names = pair_feature_names(emb.dim, cfg);
  m.weights.assign((static_cast<std::size_t>(m.feature_count()) + 1) * 3, 0.0);

  std::size_t n = data.size();
  std::vector<std::vector<double>> feats(n);
  std::vector<int> labels(n);
  // Featurization is independent per example (indexed slots).
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (long i = 0; i < static_cast<long>(n); ++i) {
    feats[static_cast<std::size_t>(i)] = pair_features(data[static_cast<std::size_t>(i)], emb, cfg);
  }
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(data[i].label);

  /// Feature families live on very different scales (window fractions vs
  /// one-hot indicators), which makes a single learning rate crawl on the
  /// small-valued dims. Train on max-abs scaled features and fold the scale
  /// back into the weights afterwards, so the returned model still scores
  /// raw feature vectors. Scaling by a positive constant per dim preserves
  /// sparsity and changes nothing about what the model can express.
  std::size_t fcount = static_cast<std::size_t>(m.feature_count());
  std::vector<double> scale(fcount, 1.0);
  {
    std::vector<double> maxabs(fcount, 0.0);
    for (const std::vector<double>& phi : feats) {
      for (std::size_t j = 0; j < fcount; ++j) {
        maxabs[j] = std::max(maxabs[j], std::fabs(phi[j]));
      }
    }
    for (std::size_t j = 0; j < fcount; ++j) {
      if (maxabs[j] > 0.0) scale[j] = 1.0 / maxabs[j];
    }
    for (std::vector<double>& phi : feats) {
      for (std::size_t j = 0; j < fcount; ++j) phi[j] *= scale[j];
    }
  }

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
      grad.assign(m.weights.size(), 0.0);
      for (std::size_t i = lo; i < hi; ++i) {
        accumulate_pair(m.weights, feats[order[i]], labels[order[i]], grad);
      }
      double inv_b = 1.0 / static_cast<double>(hi - lo);
      double reg = hyper.l2 / static_cast<double>(n);
      for (std::size_t i = 0; i < m.weights.size(); ++i) {
        m.weights[i] -= lr * (grad[i] * inv_b + reg * m.weights[i]);
      }
    }
    if (trace) {
      std::vector<double> tmp;
      trace->epoch_loss.push_back(
          re_loss_grad(m.weights, feats, labels, hyper.l2, tmp, hyper.parallel));
    }
  }
  /// Undo the training-time scaling: score(w, x * s) == score(w * s, x).
  for (std::size_t j = 0; j < fcount; ++j) {
    for (int c = 0; c < 3; ++c) m.weights[j * 3 + static_cast<std::size_t>(c)] *= scale[j];
  }
  return m;
}

RePrediction re_predict(const ReModel& m, const PairExample& p, const EmbeddingTable& emb) {
  if (emb.dim != m.dim) {
    throw DataError("re_predict: embedding dimension " + std::to_string(emb.dim) +
                    " does not match model dimension " + std::to_string(m.dim));
  }
  std::vector<double> phi = pair_features(p, emb, m.config);
  if (static_cast<int>(phi.size()) != m.feature_count()) {
    throw DataError("re_predict: feature count mismatch");
  }
  double z[3];
  double prob[3];
  scores_for(m.weights, phi, z);
  softmax3(z, prob);
  RePrediction out;
  out.scores = {prob[0], prob[1], prob[2]};
  int best = 0;
  for (int c = 1; c < 3; ++c) {
    if (prob[c] > prob[best]) best = c;  // ties keep the earlier label
  }
  out.label = static_cast<RelationLabel>(best);
  return out;
}

}  // namespace pke
