#pragma once

#include <cstdint>
#include <vector>

#include "hinge/graph.hpp"
#include "hinge/rng.hpp"

namespace hinge {

// PAD is a reserved per-type node one past the real index range. Embedding
// tables allocate a trained row for it, so padded positions stay inside the
// normal lookup path.
inline uint32_t pad_index(const HeteroGraph& g, TypeId t) { return g.num_nodes(t); }

// L sampled walks of I nodes each for one (anchor, metapath), row-major.
struct PathBatch {
  Metapath metapath;
  NodeRef anchor;
  uint32_t rows = 0;   // L
  uint32_t nodes = 0;  // I
  std::vector<uint32_t> ids;      // rows * nodes
  std::vector<uint8_t> pad_mask;  // rows * nodes, 1 where PAD filled in

  uint32_t at(uint32_t row, uint32_t pos) const { return ids[row * nodes + pos]; }
  bool padded(uint32_t row, uint32_t pos) const { return pad_mask[row * nodes + pos] != 0; }
  bool row_has_pad(uint32_t row) const;
  // First n_nodes node ids of a row.
  std::vector<uint32_t> prefix_of(uint32_t row, uint32_t n_nodes) const;
};

// Uniform metapath-guided walk with restarts. Each row restarts from the
// anchor on a dead end, up to kMaxRestarts attempts; if the last attempt still
// dead-ends, the stuck tail is PAD-filled and masked.
inline constexpr int kMaxRestarts = 8;
PathBatch sample_paths(const HeteroGraph& g, NodeRef anchor, const Metapath& mp,
                       uint32_t num_paths, Rng& rng);

// Exhaustive DFS over all complete walks, in lexicographic neighbor order.
// This is the ground truth the sampler is tested against; never used in
// training.
struct Enumeration {
  std::vector<std::vector<uint32_t>> paths;
  bool overflow = false;
};
Enumeration enumerate_neighborhood(const HeteroGraph& g, NodeRef anchor, const Metapath& mp,
                                   size_t cap = 1 << 20);

// Sampled pool for one (anchor, metapath), organized by low-order prefix.
struct PathGroup {
  std::vector<uint32_t> low_path;     // the shared prefix, I_low nodes
  std::vector<uint32_t> member_rows;  // row indices into `high`
  float sample_rate = 0.0f;           // filled in by ns_score
};

struct PathGroupBuffer {
  PathBatch high;
  uint32_t low_nodes = 0;  // I_low
  std::vector<PathGroup> groups;
  uint64_t dropped = 0;  // high rows whose prefix matched no low row

  const PathGroup* group_of_prefix(const std::vector<uint32_t>& prefix) const;
};

// Assigns each high row to the unique group whose low-order path equals its
// prefix. Low rows are deduplicated in first-appearance order; high rows with
// an unmatched prefix are dropped and counted.
PathGroupBuffer group_paths(const PathBatch& low, const PathBatch& high);

// Convenience: group a batch by its own n_nodes-prefixes (no drops possible).
PathGroupBuffer group_by_prefix(const PathBatch& high, uint32_t n_nodes);

}  // namespace hinge
