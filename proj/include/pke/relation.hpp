#ifndef PKE_RELATION_HPP
#define PKE_RELATION_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pke/common.hpp"
#include "pke/dataset.hpp"
#include "pke/embeddings.hpp"

namespace pke {

/// How a context window is pooled into one vector.  The masked modes use
/// span tokens only, so the context sentences cannot influence the result;
/// UnmaskedAvg averages every token in the window.
enum class PoolingMode { MaskedAvg = 0, MaskedMax = 1, UnmaskedAvg = 2 };

const char* pooling_name(PoolingMode mode);  // masked-avg / masked-max / unmasked-avg
PoolingMode pooling_from_name(const std::string& name);

struct ReConfig {
  PoolingMode pooling = PoolingMode::MaskedMax;
  int position_buckets = 21;  // odd, covering the clamped range [-10,10]
  int position_emb_dim = 30;  // carried through configs and model files for
                              // ablation bookkeeping; the linear featurizer
                              // derives nothing from it
  int k = 2;                  // context level
};

/// Pool a window into a single vector.  Out-of-vocabulary tokens are
/// skipped; a window whose pooled token set is fully out-of-vocabulary
/// yields the zero vector and a diagnostic.
Vector masked_pool(const ContextWindow& w, const EmbeddingTable& emb, PoolingMode mode,
                   std::vector<std::string>* diags = nullptr);

/// Feature layout (d = embedding dim, b = position_buckets):
///   [0,d)       pooled u
///   [d,2d)      pooled v
///   [2d,3d)     |u - v|
///   [3d,4d)     u ⊙ v
///   [4d,4d+b)   histogram of u's context position sequence (fractions)
///   [..+b)      histogram of v's context position sequence
///   [..+b)      one-hot sentence distance sign(pv-pu)*min(|pv-pu|,10)
///   [..+1)      lexical overlap of the two spans (Jaccard, lowercased)
int pair_feature_count(int dim, const ReConfig& cfg);
std::vector<std::string> pair_feature_names(int dim, const ReConfig& cfg);
std::vector<double> pair_features(const PairExample& p, const EmbeddingTable& emb,
                                  const ReConfig& cfg);

/// Multinomial logistic classifier over pair features.  Weight layout is
/// row-per-feature plus one bias row, 3 columns in label order None, Next,
/// If: weights[f*3 + c].
struct ReModel {
  ReConfig config;
  int dim = 0;  // embedding dimension the model was trained with
  std::vector<std::string> feature_names;
  std::vector<double> weights;  // (feature_count+1) * 3

  int feature_count() const { return static_cast<int>(feature_names.size()); }
};

struct ReHyper {
  double l2 = 1.0;
  double lr = 0.1;
  int epochs = 50;
  int batch = 32;
  std::uint64_t seed = 1;
  bool parallel = true;
};

/// Same objective family as the sequence labeler:
///   L(w) = (1/N) * [ sum_i -log softmax(w·phi_i)[y_i] + (l2/2)*||w||^2 ].
/// The serial/parallel pair mirrors the CRF one: the parallel variant folds
/// fixed 64-example blocks in block order, giving identical bits for any
/// thread count and matching the serial variant exactly up to one block.
double re_loss_grad_serial(const std::vector<double>& weights,
                           const std::vector<std::vector<double>>& feats,
                           const std::vector<int>& labels, double l2,
                           std::vector<double>& grad);
double re_loss_grad_parallel(const std::vector<double>& weights,
                             const std::vector<std::vector<double>>& feats,
                             const std::vector<int>& labels, double l2,
                             std::vector<double>& grad);
double re_loss_grad(const std::vector<double>& weights,
                    const std::vector<std::vector<double>>& feats,
                    const std::vector<int>& labels, double l2, std::vector<double>& grad,
                    bool parallel);

/// Mini-batch SGD with lr/sqrt(epoch) decay, zero init, deterministic under
/// seed.  Throws DataError when the data is empty or single-label.
ReModel re_train(const std::vector<PairExample>& data, const EmbeddingTable& emb,
                 const ReConfig& cfg, const ReHyper& hyper, TrainTrace* trace = nullptr);

struct RePrediction {
  RelationLabel label = RelationLabel::None;
  std::array<double, 3> scores{};  // softmax, sums to 1
};

RePrediction re_predict(const ReModel& m, const PairExample& p, const EmbeddingTable& emb);

}  // namespace pke

#endif
