#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hinge/dataset.hpp"
#include "hinge/metrics.hpp"
#include "hinge/model.hpp"
#include "hinge/selection.hpp"

namespace hinge {

struct TrainConfig {
  ModelConfig model;
  // Source-anchored metapath labels, e.g. "UMUM". Target templates are the
  // reversed chains, so position 0 is the anchor on both sides.
  std::vector<std::string> metapaths;

  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
  uint32_t batch = 128;
  uint32_t max_epochs = 100;
  // Stop after this many epochs without a strictly better validation
  // accuracy; the best epoch's parameters are kept.
  uint32_t patience = 25;
  std::array<double, 3> split = {0.6, 0.2, 0.2};
  uint64_t seed = 7;
  uint32_t threads = 0;  // 0 = hardware concurrency

  // Neighborhood selection: sample a wide candidate pool per metapath, score
  // its 1-hop truncations with a separately trained filter, and keep
  // model.paths survivors per side.
  bool ns = false;
  uint32_t ns_candidates = 128;
  uint32_t ns_filter_epochs = 2;

  bool topn = true;
  uint32_t topn_negatives = 49;  // ranked against each held-out positive

  std::string out_dir;  // when set: history.csv, manifest.txt, model.ckpt
};

struct EpochRow {
  uint32_t epoch = 0;
  std::string split;
  double acc = 0, f1 = 0, logloss = 0;
  bool has_topn = false;
  double map5 = 0, ndcg3 = 0, ndcg5 = 0;
};

// epoch,split,acc,f1,logloss,map5,ndcg3,ndcg5 with a header; the top-N cells
// are blank except on the final test row.
std::string history_csv(const std::vector<EpochRow>& rows);

struct TrainResult {
  std::vector<EpochRow> history;
  uint32_t epochs_run = 0;
  uint32_t best_epoch = 0;  // 1-based
  double best_val_acc = 0;
  bool stopped_early = false;
  CtrMetrics test_ctr;
  TopnMetrics test_topn;
  SplitIndices splits;
};

// Per-example diagnostics surfaced during evaluation.
struct EvalRecord {
  LabeledPair pair;
  float prob = 0;
  Tensor beta;                 // mixture weights over combination rows
  std::vector<Tensor> alphas;  // per combination, [rows, positions]
};
using EvalSink = std::function<void(size_t index, const EvalRecord&)>;

// One filter pass over the pairs: per pair, candidate pools are sampled with
// the 1-hop prefix of every template on both sides (matching the first-hop
// distribution of the full walk), scored jointly, and trained against the CTR
// label. Returns the mean loss.
double ns_train_epoch(FilterModel& filter, const HeteroGraph& g,
                      std::span<const LabeledPair> pairs, const std::vector<Metapath>& source_mps,
                      const std::vector<Metapath>& target_mps, const TrainConfig& cfg,
                      uint32_t epoch, Adam& adam);

// Owns the optimization loop: per-epoch resampling, minibatch Adam, early
// stopping on validation accuracy, and final CTR plus leave-one-out top-N
// evaluation with the best parameters.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig cfg);

  const std::vector<Metapath>& source_metapaths() const { return source_mps_; }
  const std::vector<Metapath>& target_metapaths() const { return target_mps_; }
  FilterModel* filter() { return filter_.get(); }

  TrainResult run(std::span<const LabeledPair> pairs, std::ostream* log = nullptr);

  // Forward-only passes with the current parameters. The sink, when set,
  // forces a single-threaded pass and receives records in pair order.
  std::vector<float> predict_all(std::span<const LabeledPair> pairs,
                                 const EvalSink& sink = {}) const;
  CtrMetrics evaluate(std::span<const LabeledPair> pairs, const EvalSink& sink = {}) const;

  // Each positive among pairs[test_idx] is ranked against sampled items its
  // source never touched anywhere in `pairs`.
  TopnMetrics evaluate_topn(std::span<const LabeledPair> pairs,
                            std::span<const uint32_t> test_idx) const;

  // Sampled (and, under ns, selected) inputs for one pair. Training epochs use
  // their index as the stream key; evaluation uses a fixed reserved key so
  // repeated passes see identical paths.
  static constexpr uint64_t kEvalKey = ~0ULL;
  PairPaths sample_for(const LabeledPair& p, uint64_t epoch_key) const;

 private:
  struct BatchStats {
    double loss_sum = 0;
    std::vector<float> labels, probs;
  };
  void process_batch(std::span<const LabeledPair> batch, uint64_t epoch_key, GradBuffer& grads,
                     BatchStats& stats) const;

  Model* model_;
  TrainConfig cfg_;
  std::vector<Metapath> source_mps_, target_mps_;
  std::unique_ptr<FilterModel> filter_;
  uint32_t threads_ = 1;
};

}  // namespace hinge
