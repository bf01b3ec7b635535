#ifndef PKE_CRF_HPP
#define PKE_CRF_HPP

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pke/common.hpp"
#include "pke/dataset.hpp"

namespace pke {

inline constexpr std::array<const char*, 5> kIobesTags{"B", "I", "E", "S", "O"};
int iobes_index(const std::string& tag);  // throws DataError on unknown tags

/// Scores of one sentence lattice. The engine below is tag-count agnostic;
/// the CRF model instantiates it with the 5 IOBES tags, tests also drive it
/// with smaller tagsets. Two extra virtual states sit at indices num_tags
/// (START) and num_tags+1 (STOP) of the transition matrix.
struct LatticeScores {
  int length = 0;
  int num_tags = 0;
  std::vector<double> emit;   // length * num_tags, row-major by position
  std::vector<double> trans;  // (num_tags+2) * (num_tags+2)

  int start_state() const { return num_tags; }
  int stop_state() const { return num_tags + 1; }
  double e(int t, int y) const {
    return emit[static_cast<std::size_t>(t * num_tags + y)];
  }
  double tr(int a, int b) const {
    return trans[static_cast<std::size_t>(a * (num_tags + 2) + b)];
  }
};

struct LatticeMarginals {
  double log_z = 0.0;
  std::vector<double> node;  // length * num_tags
  std::vector<double> edge;  // (length-1) * num_tags * num_tags
};

double log_sum_exp(const double* xs, int n);

/// Forward-backward in log space.
LatticeMarginals forward_backward(const LatticeScores& s);

/// Exact argmax path; ties resolved toward the lowest tag index at every
/// decision, so the result is unique.
std::vector<int> viterbi_path(const LatticeScores& s);

/// Unnormalized log-potential of one path, including START/STOP transitions.
double path_score(const LatticeScores& s, const std::vector<int>& tags);

struct FeatureVocab {
  std::unordered_map<std::string, int> index;
  std::vector<std::string> names;

  int add(const std::string& name);          // existing index or a fresh one
  int find(const std::string& name) const;   // -1 when unknown
  std::size_t size() const { return names.size(); }
};

/// Template expansion for one token position: lowercased words at offsets
/// -2..+2 (with <BOS>/<EOS> padding), word shape, 1-3 character prefixes and
/// suffixes, the (w_{i-1}, w_i) bigram, and a sentence-position bucket.
std::vector<std::string> extract_features(const std::vector<std::string>& tokens, int i);

struct CrfModel {
  FeatureVocab vocab;
  int num_tags = 5;               // fixed IOBES order B,I,E,S,O
  std::vector<double> emission;   // vocab.size() * num_tags
  std::vector<double> transition; // (num_tags+2)^2

  std::size_t param_count() const { return emission.size() + transition.size(); }
  double get_param(std::size_t i) const;
  void set_param(std::size_t i, double v);

  /// Lattice for a feature-indexed sentence.
  LatticeScores scores(const std::vector<std::vector<int>>& feats) const;
};

/// A sentence with features mapped through the vocabulary (unknown features
/// dropped) and tags mapped to indices.
struct IndexedSeq {
  std::vector<std::vector<int>> feats;
  std::vector<int> tags;  // empty when the example carries no gold tags
};

FeatureVocab fit_vocab(const std::vector<SeqExample>& data);
IndexedSeq index_example(const FeatureVocab& vocab, const SeqExample& ex);

/// Regularized mean negative conditional log-likelihood
///   L(w) = (1/N) * [ sum_i -log p(y_i | x_i) + (l2/2) * ||w||^2 ]
/// over the given examples, with the gradient written to grad (flat layout:
/// emission block then transition block). The parallel variant accumulates
/// fixed 64-example blocks and folds them back in block order, so its result
/// is bit-identical for any thread count. It matches the serial variant
/// exactly on datasets of one block or less and to rounding error beyond
/// that, where the fold order differs from straight accumulation.
double crf_loss_grad_serial(const CrfModel& m, const std::vector<IndexedSeq>& data,
                            double l2, std::vector<double>& grad);
double crf_loss_grad_parallel(const CrfModel& m, const std::vector<IndexedSeq>& data,
                              double l2, std::vector<double>& grad);
double crf_loss_grad(const CrfModel& m, const std::vector<IndexedSeq>& data, double l2,
                     std::vector<double>& grad, bool parallel);
double crf_loss(const CrfModel& m, const std::vector<IndexedSeq>& data, double l2);

struct CrfHyper {
  double l2 = 1.0;
  double lr = 0.1;
  int epochs = 50;
  int batch = 32;
  std::uint64_t seed = 1;
  bool parallel = true;
};

/// Mini-batch SGD on the objective above with step size lr/sqrt(epoch).
/// Weights start at zero (the objective is convex). Throws DataError on an
/// empty dataset or invalid tag sequences.
CrfModel crf_train(const std::vector<SeqExample>& data, const CrfHyper& hyper,
                   TrainTrace* trace = nullptr);

/// Most likely IOBES tags for a sentence.
std::vector<std::string> viterbi(const CrfModel& m, const std::vector<std::string>& tokens);

/// Spans encoded by a tag sequence. Invalid sequences are repaired instead
/// of rejected: an orphan I opens a segment like B, an unclosed segment
/// closes at its last member, an orphan E becomes a singleton.
std::vector<std::pair<int, int>> extract_spans(const std::vector<std::string>& tags);

}  // namespace pke

#endif
