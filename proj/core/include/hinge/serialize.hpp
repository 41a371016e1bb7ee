#pragma once

#include <span>
#include <string>
#include <vector>

#include "hinge/dataset.hpp"
#include "hinge/graph.hpp"
#include "hinge/sampler.hpp"
#include "hinge/tape.hpp"

namespace hinge {

// Little-endian binary containers, one magic per kind:
//   HNGE  checkpoint: named parameter tensors (name, rank, dims, f32 data)
//   HNGB  path batch: L, I, then row-major u32 node ids
//   HNGG  graph: schema block, relation table, per-row adjacency, checksum
//   HNGP  labeled pairs: u32 source, u32 target, f32 label

void save_checkpoint(const std::string& path, const ParameterStore& store);
// Strict: the file must hold exactly the store's parameters with matching
// shapes (ShapeMismatchError / UnknownNameError / DataError otherwise).
void load_checkpoint(const std::string& path, ParameterStore& store);

void save_path_batch(const std::string& path, const PathBatch& batch);
// Rebinds the ids to the given metapath; the pad mask is reconstructed from
// the reserved pad index of each position's type.
PathBatch load_path_batch(const std::string& path, const HeteroGraph& g, const Metapath& mp);

void save_graph(const std::string& path, const HeteroGraph& g);
// Loads and freezes; refuses the file if the rebuilt adjacency does not hash
// to the stored checksum.
HeteroGraph load_graph(const std::string& path);

void save_pairs(const std::string& path, std::span<const LabeledPair> pairs);
std::vector<LabeledPair> load_pairs(const std::string& path);

}  // namespace hinge
