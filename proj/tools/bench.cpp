// Timing harness for the three hot kernels, comparing the serial reference
// implementation against the OpenMP path on generated data.  The parallel
// reductions are block-ordered, so outputs must agree bit for bit; the
// harness verifies that while it measures.
//
// Usage: pke_bench [repeats]

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "pke/common.hpp"
#include "pke/corpus.hpp"
#include "pke/crf.hpp"
#include "pke/dataset.hpp"
#include "pke/fixtures.hpp"
#include "pke/matcher.hpp"
#include "pke/relation.hpp"

using namespace pke;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    double t0 = now_ms();
    f();
    double t1 = now_ms();
    if (t1 - t0 < best) best = t1 - t0;
  }
  return best;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-22s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %g\n",
              name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, diff);
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  if (repeats < 1) repeats = 1;
#ifdef _OPENMP
  std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp disabled; both columns run the serial path\n");
#endif

  auto docs = generate_fixture_docs("separable", 24, 11);
  EmbeddingTable emb = fixture_embeddings();
  MatcherConfig mcfg;

  // Kernel 1: span scoring (one phrase against a large candidate list).
  {
    std::set<int> scope;
    for (const auto& line : docs[0].transcript.lines) scope.insert(line.line_no);
    MatcherConfig wide = mcfg;
    wide.span_min = 1;
    std::vector<TextSpan> candidates = candidate_spans(docs[0].transcript, scope, wide);
    // Replicate the list so the kernel has real work per call.
    std::vector<TextSpan> big;
    for (int i = 0; i < 2000; ++i)
      big.insert(big.end(), candidates.begin(), candidates.end());
    PhraseEmbedding pv = embed_phrase(tokenize("insert wire"), emb);
    EmbedFn embedder = table_embedder(emb);
    const std::string doc_id = docs[0].transcript.id;
    std::vector<double> serial_out, parallel_out;
    double ts = time_best_ms(repeats, [&] {
      serial_out = score_spans_serial(pv.vec, big, docs[0].transcript, embedder, doc_id);
    });
    double tp = time_best_ms(repeats, [&] {
      parallel_out = score_spans_parallel(pv.vec, big, docs[0].transcript, embedder, doc_id);
    });
    report("span scoring", ts, tp, max_abs_diff(serial_out, parallel_out));
  }

  // Shared training data for the gradient kernels.
  std::vector<SeqExample> seq;
  std::vector<PairExample> pairs;
  for (const auto& doc : docs) {
    MatchedGraph m = match_protocol(doc.protocol, doc.transcript, mcfg, emb);
    auto s = build_seq_dataset(m, doc.transcript);
    seq.insert(seq.end(), s.begin(), s.end());
    auto p = build_pair_dataset(m, doc.transcript, 2);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }

  // Kernel 2: CRF batch loss + gradient.
  {
    CrfModel model;
    model.vocab = fit_vocab(seq);
    model.emission.assign(model.vocab.size() * 5, 0.01);
    model.transition.assign(7 * 7, 0.01);
    std::vector<IndexedSeq> indexed;
    for (const auto& ex : seq) indexed.push_back(index_example(model.vocab, ex));
    std::vector<double> gs(model.param_count()), gp(model.param_count());
    double ls = 0, lp = 0;
    double ts = time_best_ms(repeats, [&] {
      ls = crf_loss_grad_serial(model, indexed, 1.0, gs);
    });
    double tp = time_best_ms(repeats, [&] {
      lp = crf_loss_grad_parallel(model, indexed, 1.0, gp);
    });
    double diff = std::max(max_abs_diff(gs, gp), std::fabs(ls - lp));
    report("crf loss+grad", ts, tp, diff);
    std::printf("  (%zu sentences, %zu parameters)\n", indexed.size(), gs.size());
  }

  // Kernel 3: relation-classifier batch loss + gradient.
  {
    ReConfig cfg;
    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (const auto& p : pairs) {
      feats.push_back(pair_features(p, emb, cfg));
      labels.push_back(static_cast<int>(p.label));
    }
    std::size_t n_weights = (feats[0].size() + 1) * 3;
    std::vector<double> w(n_weights, 0.01);
    std::vector<double> gs(n_weights), gp(n_weights);
    double ls = 0, lp = 0;
    double ts = time_best_ms(repeats, [&] {
      ls = re_loss_grad_serial(w, feats, labels, 1.0, gs);
    });
    double tp = time_best_ms(repeats, [&] {
      lp = re_loss_grad_parallel(w, feats, labels, 1.0, gp);
    });
    double diff = std::max(max_abs_diff(gs, gp), std::fabs(ls - lp));
    report("re loss+grad", ts, tp, diff);
    std::printf("  (%zu pairs, %zu features)\n", feats.size(), feats[0].size());
  }
  return 0;
}
