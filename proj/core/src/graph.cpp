#include "hinge/graph.hpp"

#include <algorithm>

namespace hinge {

TypeId Metapath::type_at(size_t i, const HeteroGraph& g) const {
  if (i >= length()) throw IndexOutOfRangeError("metapath position " + std::to_string(i));
  if (i == 0) return anchor_;
  return g.relation(rels_[i - 1]).dst;
}

std::string Metapath::label(const HeteroGraph& g) const {
  std::string s(1, g.type(anchor_).code);
  for (RelationId r : rels_) s += g.type(g.relation(r).dst).code;
  return s;
}

uint64_t Metapath::label_hash(const HeteroGraph& g) const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label(g)) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

Metapath Metapath::prefix(size_t n_nodes) const {
  if (n_nodes == 0 || n_nodes > length())
    throw IndexOutOfRangeError("prefix of " + std::to_string(n_nodes) + " nodes");
  return Metapath(anchor_, std::vector<RelationId>(rels_.begin(), rels_.begin() + (n_nodes - 1)));
}

TypeId HeteroGraph::add_type(const std::string& name, char code, uint32_t count) {
  if (frozen_) throw FrozenGraphError("add_type(" + name + ")");
  for (const auto& t : types_) {
    if (t.name == name || t.code == code)
      throw DuplicateNameError("node type " + name + "/" + std::string(1, code));
  }
  types_.push_back({name, code, count});
  names_.emplace_back();
  return static_cast<TypeId>(types_.size() - 1);
}

RelationId HeteroGraph::add_relation(const std::string& name, TypeId src, TypeId dst,
                                     const std::string& inverse_name) {
  if (frozen_) throw FrozenGraphError("add_relation(" + name + ")");
  if (src >= types_.size() || dst >= types_.size())
    throw IndexOutOfRangeError("relation " + name + " references unknown type");
  for (const auto& r : relations_)
    if (r.name == name) throw DuplicateNameError("relation " + name);

  auto fwd = static_cast<RelationId>(relations_.size());
  if (src == dst) {
    relations_.push_back({name, src, dst, fwd});  // undirected, self-inverse
    pending_.emplace_back();
    return fwd;
  }
  std::string inv = inverse_name.empty()
                        ? types_[dst].name + "-" + types_[src].name
                        : inverse_name;
  for (const auto& r : relations_)
    if (r.name == inv) throw DuplicateNameError("relation " + inv);
  auto bwd = static_cast<RelationId>(fwd + 1);
  relations_.push_back({name, src, dst, bwd});
  relations_.push_back({inv, dst, src, fwd});
  pending_.emplace_back();
  pending_.emplace_back();
  return fwd;
}

void HeteroGraph::check_node(NodeRef n) const {
  if (n.type >= types_.size()) throw IndexOutOfRangeError("unknown type id");
  if (n.index >= types_[n.type].count)
    throw IndexOutOfRangeError(types_[n.type].name + " index " + std::to_string(n.index) +
                               " >= " + std::to_string(types_[n.type].count));
}

void HeteroGraph::add_edge(NodeRef a, NodeRef b, RelationId rel) {
  if (frozen_) throw FrozenGraphError("add_edge");
  if (rel >= relations_.size()) throw IndexOutOfRangeError("unknown relation id");
  const Relation& r = relations_[rel];
  check_node(a);
  check_node(b);
  if (a.type != r.src || b.type != r.dst)
    throw TypeMismatchError("edge (" + types_[a.type].name + "," + types_[b.type].name +
                            ") does not fit relation " + r.name);
  pending_[rel].emplace_back(a.index, b.index);
  // Mirror into the inverse list; for a same-type (self-inverse) relation both
  // directions land in the same list, which is what undirected means here.
  if (r.inverse == rel) {
    if (a.index != b.index) pending_[rel].emplace_back(b.index, a.index);
  } else {
    pending_[r.inverse].emplace_back(b.index, a.index);
  }
}

void HeteroGraph::freeze() {
  if (frozen_) return;
  csr_.resize(relations_.size());
  for (size_t rid = 0; rid < relations_.size(); ++rid) {
    auto& edges = pending_[rid];
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    uint32_t n = types_[relations_[rid].src].count;
    Csr& c = csr_[rid];
    c.offsets.assign(n + 1, 0);
    for (const auto& e : edges) c.offsets[e.first + 1]++;
    for (uint32_t i = 0; i < n; ++i) c.offsets[i + 1] += c.offsets[i];
    c.targets.reserve(edges.size());
    for (const auto& e : edges) c.targets.push_back(e.second);
  }
  pending_.clear();
  pending_.shrink_to_fit();
  frozen_ = true;
}

std::span<const uint32_t> HeteroGraph::neighbors(NodeRef node, RelationId rel) const {
  if (!frozen_) throw NotFrozenError("neighbors() before freeze()");
  if (rel >= relations_.size()) throw IndexOutOfRangeError("unknown relation id");
  check_node(node);
  if (node.type != relations_[rel].src)
    throw TypeMismatchError("node type " + types_[node.type].name + " vs relation " +
                            relations_[rel].name);
  const Csr& c = csr_[rel];
  return {c.targets.data() + c.offsets[node.index],
          static_cast<size_t>(c.offsets[node.index + 1] - c.offsets[node.index])};
}

const NodeType& HeteroGraph::type(TypeId t) const {
  if (t >= types_.size()) throw IndexOutOfRangeError("unknown type id");
  return types_[t];
}

const Relation& HeteroGraph::relation(RelationId r) const {
  if (r >= relations_.size()) throw IndexOutOfRangeError("unknown relation id");
  return relations_[r];
}

uint64_t HeteroGraph::num_edges(RelationId r) const {
  if (!frozen_) throw NotFrozenError("num_edges() before freeze()");
  return csr_[r].targets.size();
}

TypeId HeteroGraph::type_by_name(const std::string& name) const {
  for (size_t i = 0; i < types_.size(); ++i)
    if (types_[i].name == name) return static_cast<TypeId>(i);
  throw UnknownNameError("node type " + name);
}

TypeId HeteroGraph::type_by_code(char code) const {
  for (size_t i = 0; i < types_.size(); ++i)
    if (types_[i].code == code) return static_cast<TypeId>(i);
  throw UnknownNameError("node type code " + std::string(1, code));
}

RelationId HeteroGraph::relation_by_name(const std::string& name) const {
  for (size_t i = 0; i < relations_.size(); ++i)
    if (relations_[i].name == name) return static_cast<RelationId>(i);
  throw UnknownNameError("relation " + name);
}

RelationId HeteroGraph::relation_between(TypeId src, TypeId dst) const {
  std::optional<RelationId> found;
  for (size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].src == src && relations_[i].dst == dst) {
      if (found)
        throw DuplicateNameError("more than one relation " + types_[src].name + "->" +
                                 types_[dst].name + "; name them explicitly");
      found = static_cast<RelationId>(i);
    }
  }
  if (!found)
    throw BrokenChainError("no relation " + types_[src].name + "->" + types_[dst].name);
  return *found;
}

Metapath HeteroGraph::parse_metapath(const std::string& label) const {
  if (label.size() < 2) throw BrokenChainError("metapath label '" + label + "' too short");
  TypeId anchor = type_by_code(label[0]);
  std::vector<RelationId> rels;
  TypeId cur = anchor;
  for (size_t i = 1; i < label.size(); ++i) {
    TypeId next = type_by_code(label[i]);
    rels.push_back(relation_between(cur, next));
    cur = next;
  }
  return Metapath(anchor, std::move(rels));
}

void HeteroGraph::validate_metapath(const Metapath& mp) const {
  if (mp.anchor_type() >= types_.size()) throw IndexOutOfRangeError("metapath anchor type");
  TypeId cur = mp.anchor_type();
  for (RelationId rid : mp.relations()) {
    const Relation& r = relation(rid);
    if (r.src != cur)
      throw BrokenChainError("relation " + r.name + " does not continue from " +
                             types_[cur].name);
    cur = r.dst;
  }
}

Metapath HeteroGraph::reverse(const Metapath& mp) const {
  validate_metapath(mp);
  std::vector<RelationId> rels;
  for (auto it = mp.relations().rbegin(); it != mp.relations().rend(); ++it)
    rels.push_back(relation(*it).inverse);
  TypeId anchor = mp.relations().empty() ? mp.anchor_type()
                                         : relation(mp.relations().back()).dst;
  return Metapath(anchor, std::move(rels));
}

void HeteroGraph::set_node_names(TypeId t, std::vector<std::string> names) {
  if (t >= types_.size()) throw IndexOutOfRangeError("unknown type id");
  if (!names.empty() && names.size() != types_[t].count)
    throw ShapeMismatchError("node name table size " + std::to_string(names.size()) +
                             " vs count " + std::to_string(types_[t].count));
  names_[t] = std::move(names);
}

const std::vector<std::string>& HeteroGraph::node_names(TypeId t) const {
  if (t >= types_.size()) throw IndexOutOfRangeError("unknown type id");
  return names_[t];
}

std::string HeteroGraph::node_label(NodeRef n) const {
  check_node(n);
  if (!names_[n.type].empty()) return names_[n.type][n.index];
  return std::to_string(n.index);
}

uint64_t HeteroGraph::checksum() const {
  if (!frozen_) throw NotFrozenError("checksum() before freeze()");
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_u64 = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h = (h ^ (v & 0xff)) * 0x100000001b3ULL;
      v >>= 8;
    }
  };
  auto mix_str = [&h](const std::string& s) {
    for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    h = (h ^ 0xff) * 0x100000001b3ULL;
  };
  for (const auto& t : types_) {
    mix_str(t.name);
    mix_u64(static_cast<uint64_t>(t.code));
    mix_u64(t.count);
  }
  for (const auto& r : relations_) {
    mix_str(r.name);
    mix_u64((static_cast<uint64_t>(r.src) << 32) | r.dst);
    mix_u64(r.inverse);
  }
  for (const auto& c : csr_) {
    for (uint64_t o : c.offsets) mix_u64(o);
    for (uint32_t t : c.targets) mix_u64(t);
  }
  return h;
}

}  // namespace hinge
