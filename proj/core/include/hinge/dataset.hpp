#pragma once

#include <array>
#include <string>
#include <vector>

#include "hinge/graph.hpp"
#include "hinge/rng.hpp"

namespace hinge {

struct LabeledPair {
  uint32_t source = 0;
  uint32_t target = 0;
  float label = 0.0f;
};

struct Dataset {
  HeteroGraph graph;
  TypeId source_type = 0;
  TypeId target_type = 0;
  std::vector<LabeledPair> pairs;
};

// ml-100k directory: u.data (user \t item \t rating \t timestamp), u.user,
// u.item, u.genre, u.occupation. Every rating becomes a user-movie edge and a
// labeled pair (rating >= 4 is positive). Users link to their occupation,
// movies to their genres (the placeholder "unknown" genre column is dropped),
// and movies to their top genre-cosine neighbors, which gives the four-type
// schema the default metapaths run over.
Dataset ingest_movielens(const std::string& dir);

// Generic TSV edge list: src_type<TAB>src_id<TAB>relation<TAB>dst_type<TAB>dst_id.
// '#' starts a comment, blank lines are skipped. Types, relations and node ids
// are interned in first-appearance order; a relation must keep one
// (src_type, dst_type) signature throughout the file.
// The pairs file holds source_id<TAB>target_id<TAB>label rows over the two
// named types.
Dataset ingest_edge_list(const std::string& edges_file, const std::string& pairs_file,
                         const std::string& source_type, const std::string& target_type);

struct SplitIndices {
  std::vector<uint32_t> train, val, test;
};

// Seeded shuffle, then contiguous cuts at round(n*f). Sizes differ from exact
// fractions by at most one.
SplitIndices split_pairs(size_t n, std::array<double, 3> fractions, uint64_t seed);

}  // namespace hinge
