#include "hinge/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hinge/error.hpp"

static_assert(std::endian::native == std::endian::little, "writers assume little-endian");

namespace hinge {

namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write " + path);
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void magic(const char m[4]) { bytes(m, 4); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<size_t>(in_.gcount()) != n) throw DataError("truncated file " + path_);
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    bytes(&v, 8);
    return v;
  }
  float f32() {
    float v;
    bytes(&v, 4);
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    if (n > (1u << 20)) throw DataError("unreasonable string length in " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void magic(const char m[4]) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, m, 4) != 0)
      throw DataError(path_ + ": bad magic, expected " + std::string(m, 4));
  }
  bool at_end() { return in_.peek() == EOF; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

constexpr uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& store) {
  Writer w(path);
  w.magic("HNGE");
  w.u32(kVersion);
  w.u32(static_cast<uint32_t>(store.size()));
  for (uint32_t id = 0; id < store.size(); ++id) {
    const Tensor& t = store.value(id);
    w.str(store.name(id));
    const Shape& s = t.shape();
    w.u32(s.rank);
    for (int i = 0; i < s.rank; ++i) w.u32(s.d[i]);
    w.bytes(t.data(), t.size() * sizeof(float));
  }
  w.finish();
}

void load_checkpoint(const std::string& path, ParameterStore& store) {
  Reader r(path);
  r.magic("HNGE");
  if (r.u32() != kVersion) throw DataError(path + ": unsupported checkpoint version");
  uint32_t count = r.u32();
  if (count != store.size())
    throw DataError(path + ": holds " + std::to_string(count) + " parameters, model has " +
                    std::to_string(store.size()));
  std::vector<uint8_t> seen(store.size(), 0);
  for (uint32_t k = 0; k < count; ++k) {
    std::string name = r.str();
    uint32_t id = store.find(name);  // UnknownNameError on stray entries
    Shape s;
    s.rank = static_cast<uint8_t>(r.u32());
    if (s.rank < 1 || s.rank > 3) throw DataError(path + ": bad rank for " + name);
    for (int i = 0; i < s.rank; ++i) s.d[i] = r.u32();
    Tensor& dst = store.value(id);
    if (!(s == dst.shape()))
      throw ShapeMismatchError("checkpoint " + name + " is " + s.str() + ", model wants " +
                               dst.shape().str());
    if (seen[id]) throw DataError(path + ": duplicate entry " + name);
    seen[id] = 1;
    r.bytes(dst.data(), dst.size() * sizeof(float));
  }
}

void save_path_batch(const std::string& path, const PathBatch& batch) {
  Writer w(path);
  w.magic("HNGB");
  w.u32(batch.rows);
  w.u32(batch.nodes);
  w.bytes(batch.ids.data(), batch.ids.size() * sizeof(uint32_t));
  w.finish();
}

PathBatch load_path_batch(const std::string& path, const HeteroGraph& g, const Metapath& mp) {
  Reader r(path);
  r.magic("HNGB");
  PathBatch b;
  b.metapath = mp;
  b.rows = r.u32();
  b.nodes = r.u32();
  if (b.nodes != mp.length())
    throw DataError(path + ": " + std::to_string(b.nodes) + " nodes per row, metapath wants " +
                    std::to_string(mp.length()));
  if (b.rows == 0) throw DataError(path + ": empty batch");
  b.ids.resize(static_cast<size_t>(b.rows) * b.nodes);
  r.bytes(b.ids.data(), b.ids.size() * sizeof(uint32_t));
  b.pad_mask.resize(b.ids.size());
  for (uint32_t row = 0; row < b.rows; ++row) {
    for (uint32_t pos = 0; pos < b.nodes; ++pos) {
      TypeId t = mp.type_at(pos, g);
      uint32_t id = b.at(row, pos);
      if (id > pad_index(g, t))
        throw DataError(path + ": node id " + std::to_string(id) + " out of range for type " +
                        g.type(t).name);
      b.pad_mask[row * b.nodes + pos] = id == pad_index(g, t) ? 1 : 0;
    }
  }
  b.anchor = {mp.anchor_type(), b.at(0, 0)};
  return b;
}

void save_graph(const std::string& path, const HeteroGraph& g) {
  if (!g.frozen()) throw NotFrozenError("save_graph needs a frozen graph");
  Writer w(path);
  w.magic("HNGG");
  w.u32(kVersion);
  w.u64(g.checksum());
  w.u32(static_cast<uint32_t>(g.num_types()));
  for (TypeId t = 0; t < g.num_types(); ++t) {
    const NodeType& nt = g.type(t);
    w.str(nt.name);
    w.u32(static_cast<uint32_t>(nt.code));
    w.u32(nt.count);
    const auto& names = g.node_names(t);
    w.u32(static_cast<uint32_t>(names.size()));
    for (const auto& n : names) w.str(n);
  }
  w.u32(static_cast<uint32_t>(g.num_relations()));
  for (RelationId rel = 0; rel < g.num_relations(); ++rel) {
    const Relation& r = g.relation(rel);
    w.str(r.name);
    w.u32(r.src);
    w.u32(r.dst);
    w.u32(r.inverse);
  }
  for (RelationId rel = 0; rel < g.num_relations(); ++rel) {
    TypeId src = g.relation(rel).src;
    for (uint32_t i = 0; i < g.num_nodes(src); ++i) {
      auto nbrs = g.neighbors({src, i}, rel);
      w.u32(static_cast<uint32_t>(nbrs.size()));
      w.bytes(nbrs.data(), nbrs.size() * sizeof(uint32_t));
    }
  }
  w.finish();
}

HeteroGraph load_graph(const std::string& path) {
  Reader r(path);
  r.magic("HNGG");
  if (r.u32() != kVersion) throw DataError(path + ": unsupported graph version");
  uint64_t want_sum = r.u64();

  HeteroGraph g;
  uint32_t n_types = r.u32();
  std::vector<std::vector<std::string>> names(n_types);
  for (uint32_t t = 0; t < n_types; ++t) {
    std::string name = r.str();
    char code = static_cast<char>(r.u32());
    uint32_t count = r.u32();
    g.add_type(name, code, count);
    uint32_t n_names = r.u32();
    for (uint32_t i = 0; i < n_names; ++i) names[t].push_back(r.str());
  }
  for (uint32_t t = 0; t < n_types; ++t)
    if (!names[t].empty()) g.set_node_names(t, std::move(names[t]));

  uint32_t n_rels = r.u32();
  struct RelRow {
    std::string name;
    uint32_t src, dst, inverse;
  };
  std::vector<RelRow> rels(n_rels);
  for (auto& row : rels) {
    row.name = r.str();
    row.src = r.u32();
    row.dst = r.u32();
    row.inverse = r.u32();
  }
  for (uint32_t rel = 0; rel < n_rels; ++rel) {
    if (rels[rel].inverse == rel) {
      g.add_relation(rels[rel].name, rels[rel].src, rels[rel].dst);
    } else if (rels[rel].inverse == rel + 1) {
      g.add_relation(rels[rel].name, rels[rel].src, rels[rel].dst, rels[rel + 1].name);
      ++rel;  // the inverse row was registered along with the forward one
    } else {
      throw DataError(path + ": relation table is not in forward/inverse order");
    }
  }

  // Adjacency is stored for every relation, but only the forward half gets
  // replayed; add_edge mirrors into the inverse and freeze() rebuilds the
  // sorted rows, so the checksum must come out identical.
  for (uint32_t rel = 0; rel < n_rels; ++rel) {
    TypeId src = rels[rel].src;
    bool self = rels[rel].inverse == rel;
    bool replay = self || rels[rel].inverse > rel;
    for (uint32_t i = 0; i < g.num_nodes(src); ++i) {
      uint32_t deg = r.u32();
      std::vector<uint32_t> nbrs(deg);
      r.bytes(nbrs.data(), deg * sizeof(uint32_t));
      if (!replay) continue;
      for (uint32_t j : nbrs) {
        if (self && j < i) continue;  // the j >= i copy adds both directions
        g.add_edge({src, i}, {rels[rel].dst, j}, rel);
      }
    }
  }
  g.freeze();
  if (g.checksum() != want_sum) throw DataError(path + ": checksum mismatch after rebuild");
  return g;
}

void save_pairs(const std::string& path, std::span<const LabeledPair> pairs) {
  Writer w(path);
  w.magic("HNGP");
  w.u32(static_cast<uint32_t>(pairs.size()));
  for (const auto& p : pairs) {
    w.u32(p.source);
    w.u32(p.target);
    w.f32(p.label);
  }
  w.finish();
}

std::vector<LabeledPair> load_pairs(const std::string& path) {
  Reader r(path);
  r.magic("HNGP");
  uint32_t n = r.u32();
  std::vector<LabeledPair> out(n);
  for (auto& p : out) {
    p.source = r.u32();
    p.target = r.u32();
    p.label = r.f32();
  }
  return out;
}

}  // namespace hinge
