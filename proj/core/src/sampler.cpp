#include "hinge/sampler.hpp"

#include <map>

namespace hinge {

bool PathBatch::row_has_pad(uint32_t row) const {
  for (uint32_t p = 0; p < nodes; ++p)
    if (padded(row, p)) return true;
  return false;
}

std::vector<uint32_t> PathBatch::prefix_of(uint32_t row, uint32_t n_nodes) const {
  return {ids.begin() + row * nodes, ids.begin() + row * nodes + n_nodes};
}

PathBatch sample_paths(const HeteroGraph& g, NodeRef anchor, const Metapath& mp,
                       uint32_t num_paths, Rng& rng) {
  g.validate_metapath(mp);
  if (anchor.type != mp.anchor_type())
    throw TypeMismatchError("anchor type does not match metapath anchor");

  const auto I = static_cast<uint32_t>(mp.length());
  PathBatch batch;
  batch.metapath = mp;
  batch.anchor = anchor;
  batch.rows = num_paths;
  batch.nodes = I;
  batch.ids.resize(static_cast<size_t>(num_paths) * I);
  batch.pad_mask.assign(static_cast<size_t>(num_paths) * I, 0);

  std::vector<uint32_t> walk(I);
  for (uint32_t row = 0; row < num_paths; ++row) {
    uint32_t reached = 1;  // positions filled in the most recent attempt
    for (int attempt = 0; attempt < kMaxRestarts; ++attempt) {
      walk[0] = anchor.index;
      reached = 1;
      uint32_t cur = anchor.index;
      for (size_t s = 0; s < mp.relations().size(); ++s) {
        RelationId rel = mp.relations()[s];
        auto nbrs = g.neighbors({g.relation(rel).src, cur}, rel);
        if (nbrs.empty()) break;  // dead end: restart from the anchor
        cur = nbrs[rng.next_index(static_cast<uint32_t>(nbrs.size()))];
        walk[reached++] = cur;
      }
      if (reached == I) break;
    }
    uint32_t* out = batch.ids.data() + static_cast<size_t>(row) * I;
    uint8_t* mask = batch.pad_mask.data() + static_cast<size_t>(row) * I;
    for (uint32_t p = 0; p < reached; ++p) out[p] = walk[p];
    for (uint32_t p = reached; p < I; ++p) {
      out[p] = pad_index(g, mp.type_at(p, g));
      mask[p] = 1;
    }
  }
  return batch;
}

namespace {

void dfs(const HeteroGraph& g, const Metapath& mp, std::vector<uint32_t>& walk, size_t depth,
         Enumeration& out, size_t cap) {
  if (out.overflow) return;
  if (depth == mp.relations().size()) {
    if (out.paths.size() >= cap) {
      out.overflow = true;
      return;
    }
    out.paths.push_back(walk);
    return;
  }
  RelationId rel = mp.relations()[depth];
  for (uint32_t next : g.neighbors({g.relation(rel).src, walk[depth]}, rel)) {
    walk[depth + 1] = next;
    dfs(g, mp, walk, depth + 1, out, cap);
    if (out.overflow) return;
  }
}

}  // namespace

Enumeration enumerate_neighborhood(const HeteroGraph& g, NodeRef anchor, const Metapath& mp,
                                   size_t cap) {
  g.validate_metapath(mp);
  if (anchor.type != mp.anchor_type())
    throw TypeMismatchError("anchor type does not match metapath anchor");
  Enumeration out;
  std::vector<uint32_t> walk(mp.length());
  walk[0] = anchor.index;
  dfs(g, mp, walk, 0, out, cap);
  return out;
}

const PathGroup* PathGroupBuffer::group_of_prefix(const std::vector<uint32_t>& prefix) const {
  for (const auto& grp : groups)
    if (grp.low_path == prefix) return &grp;
  return nullptr;
}

PathGroupBuffer group_paths(const PathBatch& low, const PathBatch& high) {
  if (low.anchor != high.anchor) throw PrefixMismatchError("different anchors");
  if (low.nodes > high.nodes || high.metapath.prefix(low.nodes) != low.metapath)
    throw PrefixMismatchError("low metapath is not a prefix of the high metapath");

  PathGroupBuffer buf;
  buf.high = high;
  buf.low_nodes = low.nodes;

  std::map<std::vector<uint32_t>, size_t> index;  // key -> group slot
  for (uint32_t row = 0; row < low.rows; ++row) {
    auto key = low.prefix_of(row, low.nodes);
    if (index.emplace(key, buf.groups.size()).second)
      buf.groups.push_back({std::move(key), {}, 0.0f});
  }
  for (uint32_t row = 0; row < high.rows; ++row) {
    auto it = index.find(high.prefix_of(row, low.nodes));
    if (it == index.end()) {
      buf.dropped++;
      continue;
    }
    buf.groups[it->second].member_rows.push_back(row);
  }
  return buf;
}

PathGroupBuffer group_by_prefix(const PathBatch& high, uint32_t n_nodes) {
  PathBatch low;
  low.metapath = high.metapath.prefix(n_nodes);
  low.anchor = high.anchor;
  low.rows = high.rows;
  low.nodes = n_nodes;
  low.ids.reserve(static_cast<size_t>(high.rows) * n_nodes);
  low.pad_mask.reserve(static_cast<size_t>(high.rows) * n_nodes);
  for (uint32_t row = 0; row < high.rows; ++row) {
    for (uint32_t p = 0; p < n_nodes; ++p) {
      low.ids.push_back(high.at(row, p));
      low.pad_mask.push_back(high.padded(row, p) ? 1 : 0);
    }
  }
  return group_paths(low, high);
}

}  // namespace hinge
