#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hinge/error.hpp"

namespace hinge {

using TypeId = uint32_t;
using RelationId = uint32_t;

struct NodeRef {
  TypeId type = 0;
  uint32_t index = 0;
  bool operator==(const NodeRef&) const = default;
};

struct NodeType {
  std::string name;   // "user"
  char code;          // 'U', used in metapath labels
  uint32_t count;     // dense node indices are [0, count)
};

struct Relation {
  std::string name;   // "user-movie"
  TypeId src;
  TypeId dst;
  RelationId inverse; // always registered; same-type relations are self-inverse
};

class HeteroGraph;

// A typed walk template: anchor type plus a chain of relations. The node
// sequence it induces has length() = relations + 1.
class Metapath {
 public:
  Metapath() = default;
  Metapath(TypeId anchor, std::vector<RelationId> rels) : anchor_(anchor), rels_(std::move(rels)) {}

  TypeId anchor_type() const { return anchor_; }
  const std::vector<RelationId>& relations() const { return rels_; }
  size_t length() const { return rels_.size() + 1; }

  TypeId type_at(size_t i, const HeteroGraph& g) const;
  std::string label(const HeteroGraph& g) const;
  uint64_t label_hash(const HeteroGraph& g) const;

  // First n_nodes positions of this walk template.
  Metapath prefix(size_t n_nodes) const;

  bool operator==(const Metapath&) const = default;

 private:
  TypeId anchor_ = 0;
  std::vector<RelationId> rels_;
};

// Heterogeneous graph with schema-checked typed edges. Build phase accepts
// edges in any order; freeze() compacts them into per-relation CSR adjacency
// (sorted, deduplicated) and makes the graph immutable. Every relation keeps a
// registered inverse so each edge is traversable both ways.
class HeteroGraph {
 public:
  TypeId add_type(const std::string& name, char code, uint32_t count);

  // Registers a relation and its inverse in one call; returns the forward id.
  // A same-type relation is undirected and acts as its own inverse.
  RelationId add_relation(const std::string& name, TypeId src, TypeId dst,
                          const std::string& inverse_name = "");

  void add_edge(NodeRef a, NodeRef b, RelationId rel);
  void freeze();
  bool frozen() const { return frozen_; }

  std::span<const uint32_t> neighbors(NodeRef node, RelationId rel) const;
  size_t degree(NodeRef node, RelationId rel) const { return neighbors(node, rel).size(); }

  size_t num_types() const { return types_.size(); }
  size_t num_relations() const { return relations_.size(); }
  const NodeType& type(TypeId t) const;
  const Relation& relation(RelationId r) const;
  uint32_t num_nodes(TypeId t) const { return type(t).count; }
  uint64_t num_edges(RelationId r) const;

  TypeId type_by_name(const std::string& name) const;
  TypeId type_by_code(char code) const;
  RelationId relation_by_name(const std::string& name) const;
  // The unique relation src->dst; BrokenChainError if none, DuplicateNameError
  // if ambiguous (caller must then name relations explicitly).
  RelationId relation_between(TypeId src, TypeId dst) const;

  // Parses a label like "UMUM" against the schema and checks the chain.
  Metapath parse_metapath(const std::string& label) const;
  void validate_metapath(const Metapath& mp) const;
  Metapath reverse(const Metapath& mp) const;

  // Optional display names for nodes (interned string ids). Empty means "use
  // the dense index".
  void set_node_names(TypeId t, std::vector<std::string> names);
  const std::vector<std::string>& node_names(TypeId t) const;
  std::string node_label(NodeRef n) const;

  // Stable content checksum over schema and adjacency (FNV-1a), for round-trip
  // tests and the run manifest.
  uint64_t checksum() const;

 private:
  struct Csr {
    std::vector<uint64_t> offsets;  // size src_count + 1
    std::vector<uint32_t> targets;  // sorted within each row
  };

  void check_node(NodeRef n) const;

  std::vector<NodeType> types_;
  std::vector<Relation> relations_;
  std::vector<std::vector<std::pair<uint32_t, uint32_t>>> pending_;  // per relation
  std::vector<Csr> csr_;
  std::vector<std::vector<std::string>> names_;
  bool frozen_ = false;
};

}  // namespace hinge
