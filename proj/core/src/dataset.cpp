#include "hinge/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <unordered_map>

#include "hinge/error.hpp"

namespace hinge {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

uint32_t parse_u32(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    unsigned long v = std::stoul(s, &used);
    if (used != s.size() || v > UINT32_MAX) throw std::invalid_argument(s);
    return static_cast<uint32_t>(v);
  } catch (const std::exception&) {
    throw DataError("bad " + what + ": '" + s + "'");
  }
}

float parse_float(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    float v = std::stof(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad " + what + ": '" + s + "'");
  }
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

// Movies with overlapping genre sets get linked; each keeps its top neighbors
// by cosine over the genre flags.
constexpr size_t kMovieNeighbors = 50;

}  // namespace

Dataset ingest_movielens(const std::string& dir) {
  const std::string base = dir.empty() || dir.back() == '/' ? dir : dir + "/";

  // Users. File order defines node indices.
  std::vector<std::string> user_ids;
  std::vector<std::string> user_occupation;
  std::unordered_map<std::string, uint32_t> user_index;
  for (const auto& line : read_lines(base + "u.user")) {
    if (line.empty()) continue;
    auto f = split(line, '|');
    if (f.size() < 5) throw DataError("bad u.user row: '" + line + "'");
    if (!user_index.emplace(f[0], static_cast<uint32_t>(user_ids.size())).second)
      throw DataError("duplicate user id " + f[0]);
    user_ids.push_back(f[0]);
    user_occupation.push_back(f[3]);
  }

  std::vector<std::string> occupations = user_occupation;
  std::sort(occupations.begin(), occupations.end());
  occupations.erase(std::unique(occupations.begin(), occupations.end()), occupations.end());
  std::unordered_map<std::string, uint32_t> occupation_index;
  for (uint32_t i = 0; i < occupations.size(); ++i) occupation_index.emplace(occupations[i], i);

  // Genre names, dropping the placeholder column. Without u.genre the flags
  // are anonymous and the placeholder is assumed to be column 0, as in the
  // published layout.
  std::vector<std::string> genre_names;     // kept genres, in flag order
  std::vector<int> genre_remap;             // flag column -> kept index, -1 = dropped
  if (file_exists(base + "u.genre")) {
    for (const auto& line : read_lines(base + "u.genre")) {
      if (line.empty()) continue;
      auto f = split(line, '|');
      if (f[0] == "unknown") {
        genre_remap.push_back(-1);
      } else {
        genre_remap.push_back(static_cast<int>(genre_names.size()));
        genre_names.push_back(f[0]);
      }
    }
  }

  // Movies.
  std::vector<std::string> movie_ids;
  std::vector<uint32_t> movie_genre_mask;   // bit per kept genre
  std::unordered_map<std::string, uint32_t> movie_index;
  for (const auto& line : read_lines(base + "u.item")) {
    if (line.empty()) continue;
    auto f = split(line, '|');
    if (f.size() < 6) throw DataError("bad u.item row: '" + line + "'");
    if (genre_remap.empty()) {
      size_t flags = f.size() - 5;
      for (size_t k = 0; k < flags; ++k)
        genre_remap.push_back(k == 0 ? -1 : static_cast<int>(k - 1));
      for (size_t k = 1; k < flags; ++k) genre_names.push_back("genre" + std::to_string(k));
    }
    if (f.size() < 5 + genre_remap.size()) throw DataError("short genre flags: '" + f[0] + "'");
    if (!movie_index.emplace(f[0], static_cast<uint32_t>(movie_ids.size())).second)
      throw DataError("duplicate movie id " + f[0]);
    movie_ids.push_back(f[0]);
    uint32_t mask = 0;
    size_t first_flag = f.size() - genre_remap.size();
    for (size_t k = 0; k < genre_remap.size(); ++k) {
      if (f[first_flag + k] == "1" && genre_remap[k] >= 0) mask |= 1u << genre_remap[k];
    }
    movie_genre_mask.push_back(mask);
  }
  if (genre_names.size() > 32) throw DataError("more genre columns than supported");

  Dataset ds;
  HeteroGraph& g = ds.graph;
  TypeId user_t = g.add_type("user", 'U', static_cast<uint32_t>(user_ids.size()));
  TypeId movie_t = g.add_type("movie", 'M', static_cast<uint32_t>(movie_ids.size()));
  TypeId occ_t = g.add_type("occupation", 'O', static_cast<uint32_t>(occupations.size()));
  TypeId genre_t = g.add_type("genre", 'G', static_cast<uint32_t>(genre_names.size()));
  ds.source_type = user_t;
  ds.target_type = movie_t;

  RelationId rates = g.add_relation("rates", user_t, movie_t, "rated-by");
  RelationId works = g.add_relation("works-as", user_t, occ_t, "held-by");
  RelationId tagged = g.add_relation("tagged", movie_t, genre_t, "tags");
  RelationId similar = g.add_relation("similar", movie_t, movie_t);

  g.set_node_names(user_t, user_ids);
  g.set_node_names(movie_t, movie_ids);
  g.set_node_names(occ_t, occupations);
  g.set_node_names(genre_t, genre_names);

  for (uint32_t u = 0; u < user_occupation.size(); ++u)
    g.add_edge({user_t, u}, {occ_t, occupation_index.at(user_occupation[u])}, works);

  for (uint32_t m = 0; m < movie_genre_mask.size(); ++m) {
    uint32_t mask = movie_genre_mask[m];
    while (mask) {
      uint32_t k = static_cast<uint32_t>(std::countr_zero(mask));
      g.add_edge({movie_t, m}, {genre_t, k}, tagged);
      mask &= mask - 1;
    }
  }

  // Genre-cosine neighbors. Ties prefer the smaller movie index; the union
  // over both endpoints is added, so the relation comes out symmetric.
  {
    const size_t n = movie_genre_mask.size();
    std::vector<std::pair<float, uint32_t>> scored;
    for (uint32_t i = 0; i < n; ++i) {
      uint32_t mi = movie_genre_mask[i];
      int ci = std::popcount(mi);
      if (ci == 0) continue;
      scored.clear();
      for (uint32_t j = 0; j < n; ++j) {
        if (j == i) continue;
        int shared = std::popcount(mi & movie_genre_mask[j]);
        if (shared == 0) continue;
        float sim = static_cast<float>(shared) /
                    std::sqrt(static_cast<float>(ci) *
                              static_cast<float>(std::popcount(movie_genre_mask[j])));
        scored.emplace_back(sim, j);
      }
      size_t keep = std::min(kMovieNeighbors, scored.size());
      std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                        [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                        });
      for (size_t k = 0; k < keep; ++k) {
        uint32_t lo = std::min(i, scored[k].second);
        uint32_t hi = std::max(i, scored[k].second);
        g.add_edge({movie_t, lo}, {movie_t, hi}, similar);
      }
    }
  }

  for (const auto& line : read_lines(base + "u.data")) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() < 3) throw DataError("bad u.data row: '" + line + "'");
    auto ui = user_index.find(f[0]);
    auto mi = movie_index.find(f[1]);
    if (ui == user_index.end()) throw DataError("rating for unknown user " + f[0]);
    if (mi == movie_index.end()) throw DataError("rating for unknown movie " + f[1]);
    uint32_t rating = parse_u32(f[2], "rating");
    g.add_edge({user_t, ui->second}, {movie_t, mi->second}, rates);
    ds.pairs.push_back({ui->second, mi->second, rating >= 4 ? 1.0f : 0.0f});
  }

  g.freeze();
  return ds;
}

namespace {

struct Interner {
  std::vector<std::string> names;
  std::unordered_map<std::string, uint32_t> index;

  uint32_t get(const std::string& name) {
    auto [it, fresh] = index.emplace(name, static_cast<uint32_t>(names.size()));
    if (fresh) names.push_back(name);
    return it->second;
  }
  const uint32_t* find(const std::string& name) const {
    auto it = index.find(name);
    return it == index.end() ? nullptr : &it->second;
  }
};

}  // namespace

Dataset ingest_edge_list(const std::string& edges_file, const std::string& pairs_file,
                         const std::string& source_type, const std::string& target_type) {
  struct RelSpec {
    uint32_t src, dst;
  };
  Interner types;
  std::vector<Interner> nodes;
  Interner relations;
  std::vector<RelSpec> rel_specs;
  std::vector<std::array<uint32_t, 3>> edges;  // relation, src, dst

  for (const auto& raw : read_lines(edges_file)) {
    std::string line = raw.substr(0, raw.find('#'));
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 5) throw DataError("expected 5 tab-separated fields: '" + raw + "'");
    uint32_t st = types.get(f[0]);
    uint32_t dt = types.get(f[3]);
    if (nodes.size() < types.names.size()) nodes.resize(types.names.size());
    uint32_t si = nodes[st].get(f[1]);
    uint32_t di = nodes[dt].get(f[4]);
    uint32_t rel = relations.get(f[2]);
    if (rel == rel_specs.size()) {
      rel_specs.push_back({st, dt});
    } else if (rel_specs[rel].src != st || rel_specs[rel].dst != dt) {
      throw DataError("relation '" + f[2] + "' used with two type signatures");
    }
    edges.push_back({rel, si, di});
  }
  if (types.names.size() > 26) throw DataError("more than 26 node types");

  Dataset ds;
  HeteroGraph& g = ds.graph;
  std::vector<char> codes;
  for (size_t t = 0; t < types.names.size(); ++t) {
    char want = static_cast<char>(std::toupper(static_cast<unsigned char>(types.names[t][0])));
    if (want < 'A' || want > 'Z' || std::find(codes.begin(), codes.end(), want) != codes.end()) {
      want = 0;
      for (char c = 'A'; c <= 'Z'; ++c)
        if (std::find(codes.begin(), codes.end(), c) == codes.end()) {
          want = c;
          break;
        }
    }
    codes.push_back(want);
    g.add_type(types.names[t], want, static_cast<uint32_t>(nodes[t].names.size()));
    g.set_node_names(static_cast<TypeId>(t), nodes[t].names);
  }
  std::vector<RelationId> rel_ids;
  for (size_t r = 0; r < relations.names.size(); ++r)
    rel_ids.push_back(
        g.add_relation(relations.names[r], rel_specs[r].src, rel_specs[r].dst));
  for (const auto& e : edges)
    g.add_edge({rel_specs[e[0]].src, e[1]}, {rel_specs[e[0]].dst, e[2]}, rel_ids[e[0]]);
  g.freeze();

  const uint32_t* st = types.find(source_type);
  const uint32_t* tt = types.find(target_type);
  if (!st) throw DataError("source type '" + source_type + "' not in edge list");
  if (!tt) throw DataError("target type '" + target_type + "' not in edge list");
  ds.source_type = *st;
  ds.target_type = *tt;

  for (const auto& raw : read_lines(pairs_file)) {
    std::string line = raw.substr(0, raw.find('#'));
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) throw DataError("expected 3 tab-separated fields: '" + raw + "'");
    const uint32_t* si = nodes[*st].find(f[0]);
    const uint32_t* ti = nodes[*tt].find(f[1]);
    if (!si) throw DataError("pair references unknown " + source_type + " '" + f[0] + "'");
    if (!ti) throw DataError("pair references unknown " + target_type + " '" + f[1] + "'");
    ds.pairs.push_back({*si, *ti, parse_float(f[2], "label")});
  }
  return ds;
}

SplitIndices split_pairs(size_t n, std::array<double, 3> fractions, uint64_t seed) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("split fractions must sum to 1");
  if (fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0)
    throw ConfigError("split fractions must be nonnegative");

  std::vector<uint32_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<uint32_t>(i);
  Rng rng = Rng::keyed({seed, 0x5b117u});
  rng.shuffle(order);

  size_t cut0 = static_cast<size_t>(std::llround(static_cast<double>(n) * fractions[0]));
  size_t cut1 = static_cast<size_t>(
      std::llround(static_cast<double>(n) * (fractions[0] + fractions[1])));
  cut0 = std::min(cut0, n);
  cut1 = std::min(std::max(cut1, cut0), n);

  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + cut0);
  out.val.assign(order.begin() + cut0, order.begin() + cut1);
  out.test.assign(order.begin() + cut1, order.end());
  return out;
}

}  // namespace hinge
