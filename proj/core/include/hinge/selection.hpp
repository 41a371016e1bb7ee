#pragma once

#include "hinge/model.hpp"

namespace hinge {

// The neighborhood-selection filter: a separately parameterized copy of the
// scoring pipeline that only ever sees 1-hop (two-node) path batches. Its
// path-attention weights, after the filter is trained on the CTR labels,
// become sample rates over a candidate pool.
class FilterModel {
 public:
  FilterModel(const HeteroGraph& g, ModelConfig cfg, uint64_t seed);

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  ParameterStore& params() { return model_.params(); }

  // Every batch must be 1-hop; throws NotLowOrderError otherwise.
  Value forward(Tape& t, const PairPaths& low, ForwardDiag* diag = nullptr) const;

 private:
  Model model_;
};

// Truncates every row to its first n_nodes positions.
PathBatch truncate_batch(const PathBatch& batch, uint32_t n_nodes);
// Keeps the given rows (indices into batch), in the given order.
PathBatch select_rows(const PathBatch& batch, std::span<const uint32_t> rows);

// Row-level and per-group rates for one scored pair of buffers. Group rates
// are also written into the buffers' sample_rate fields.
struct SampleRates {
  std::vector<float> rows;    // beta per aligned candidate row, sums to 1
  std::vector<float> source;  // per source-buffer group
  std::vector<float> target;  // per target-buffer group
};

// Scores one candidate pool pair: runs the filter on the 1-hop truncations of
// the aligned high batches and folds the row-level beta into per-group rates
// by prefix membership.
SampleRates ns_score(const FilterModel& filter, PathGroupBuffer& src, PathGroupBuffer& tgt);

// Survivor plan for one buffer: budget split across groups proportionally to
// their sample rates by largest remainder (capacity spills to the neediest
// group, ties to the lower group index), then a uniform without-replacement
// draw inside each group.
struct SelectionPlan {
  std::vector<uint32_t> counts;     // per group
  std::vector<uint32_t> survivors;  // row indices into buffer.high, ascending
};

SelectionPlan ns_select(const PathGroupBuffer& buf, uint32_t budget, Rng& rng);

}  // namespace hinge
