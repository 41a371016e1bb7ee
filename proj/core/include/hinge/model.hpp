#pragma once

#include "hinge/attention.hpp"
#include "hinge/interaction.hpp"

namespace hinge {

struct ModelConfig {
  uint32_t embed_dim = 128;
  uint32_t heads = 3;
  uint32_t paths = 16;  // L, sampled walks per metapath
  float elem_temp = 0.2f;
  float path_temp = 0.2f;
  bool cross = false;      // full source x target metapath product
  bool all_pairs = false;  // row-level cross inside a combination
  bool mean_pool = false;  // ablation: no interaction, pooled embeddings
  ConvRoute route = ConvRoute::fft;
  Nonlinearity nonlin = Nonlinearity::elu;
};

// Sampled inputs for one labeled (source, target) pair: one batch per source
// metapath, one per target metapath. Target batches are sampled under the
// reversed templates so their position 0 is the target anchor.
struct PairPaths {
  std::vector<PathBatch> source;
  std::vector<PathBatch> target;
};

struct ForwardDiag {
  Tensor beta;                 // over all stacked rows
  std::vector<Tensor> alphas;  // one [rows, M] per combination
};

// The full scoring pipeline: per combination, embed both path batches,
// interact them, attend over interaction positions; then attend over all
// combination rows jointly and predict from the mixture.
class Model {
 public:
  Model(const HeteroGraph& g, ModelConfig cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const HeteroGraph& graph() const { return *graph_; }

  uint32_t table_for(TypeId t) const { return tables_.at(t); }
  std::vector<uint32_t> tables_for(const PathBatch& batch) const;

  Value forward(Tape& t, const PairPaths& in, ForwardDiag* diag = nullptr) const;

 private:
  const HeteroGraph* graph_;
  ModelConfig cfg_;
  ParameterStore store_;
  std::vector<uint32_t> tables_;
  ElementAttentionParams elem_;
  PathAttentionParams path_;
  PredictParams head_;
  uint32_t pool_w_ = 0, pool_b_ = 0;  // ablation projection, registered only when used
};

}  // namespace hinge
