#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "hinge/sampler.hpp"

using namespace hinge;
using namespace hinge::test;

TEST_SUITE_BEGIN("sampler");

namespace {

bool is_edge(const HeteroGraph& g, const Metapath& mp, size_t pos, uint32_t from, uint32_t to) {
  auto n = g.neighbors({mp.type_at(pos, g), from}, mp.relations()[pos]);
  return std::binary_search(n.begin(), n.end(), to);
}

}  // namespace

TEST_CASE("worked neighborhood example") {
  HeteroGraph g = umd_graph();
  Metapath umd = g.parse_metapath("UMD");
  NodeRef ua{g.type_by_code('U'), 0};

  Enumeration one = enumerate_neighborhood(g, ua, umd.prefix(2));
  REQUIRE(one.paths.size() == 2);
  CHECK(one.paths[0] == std::vector<uint32_t>{0, 0});
  CHECK(one.paths[1] == std::vector<uint32_t>{0, 1});

  Enumeration full = enumerate_neighborhood(g, ua, umd);
  REQUIRE(full.paths.size() == 4);
  CHECK(full.paths[0] == std::vector<uint32_t>{0, 0, 0});  // u_A, m_A, d_A
  CHECK(full.paths[1] == std::vector<uint32_t>{0, 0, 1});  // u_A, m_A, d_B
  CHECK(full.paths[2] == std::vector<uint32_t>{0, 0, 2});  // u_A, m_A, d_C
  CHECK(full.paths[3] == std::vector<uint32_t>{0, 1, 1});  // u_A, m_B, d_B
  CHECK_FALSE(full.overflow);
}

TEST_CASE("enumeration cap sets the overflow flag") {
  HeteroGraph g = umd_graph();
  Enumeration e =
      enumerate_neighborhood(g, {g.type_by_code('U'), 0}, g.parse_metapath("UMD"), 2);
  CHECK(e.overflow);
  CHECK(e.paths.size() <= 2);
}

TEST_CASE("sampled rows are walks and anchor at position 0") {
  ToyData toy = make_toy(6, 8, 3, 0, 21);
  Metapath mp = toy.g.parse_metapath("UITI");
  NodeRef anchor{mp.anchor_type(), 2};
  Rng rng = Rng::keyed({7, anchor.type, anchor.index, mp.label_hash(toy.g), 0});
  PathBatch b = sample_paths(toy.g, anchor, mp, 64, rng);
  REQUIRE(b.rows == 64);
  REQUIRE(b.nodes == 4);
  for (uint32_t row = 0; row < b.rows; ++row) {
    CHECK(b.at(row, 0) == anchor.index);
    CHECK_FALSE(b.padded(row, 0));
    bool padded = false;
    for (uint32_t pos = 0; pos + 1 < b.nodes; ++pos) {
      if (b.padded(row, pos + 1)) {
        padded = true;
        continue;
      }
      REQUIRE_FALSE(padded);  // pad is a suffix, never interior
      CHECK(is_edge(toy.g, mp, pos, b.at(row, pos), b.at(row, pos + 1)));
    }
  }
}

TEST_CASE("complete samples come from the enumerated neighborhood") {
  HeteroGraph g = umd_graph();
  Metapath mp = g.parse_metapath("UMD");
  NodeRef anchor{g.type_by_code('U'), 0};
  Enumeration e = enumerate_neighborhood(g, anchor, mp);
  std::set<std::vector<uint32_t>> universe(e.paths.begin(), e.paths.end());
  Rng rng = Rng::keyed({3, 1, 4});
  PathBatch b = sample_paths(g, anchor, mp, 200, rng);
  for (uint32_t row = 0; row < b.rows; ++row) {
    REQUIRE_FALSE(b.row_has_pad(row));  // this graph has no dead ends
    CHECK(universe.count(b.prefix_of(row, b.nodes)) == 1);
  }
}

TEST_CASE("per-step uniformity, chi-squared at alpha 0.001") {
  HeteroGraph g = umd_graph();
  Metapath mp = g.parse_metapath("UMD");
  NodeRef anchor{g.type_by_code('U'), 0};
  Rng rng = Rng::keyed({99, 0});
  const uint32_t kRows = 30000;
  PathBatch b = sample_paths(g, anchor, mp, kRows, rng);
  std::map<std::vector<uint32_t>, uint32_t> counts;
  for (uint32_t row = 0; row < kRows; ++row) ++counts[b.prefix_of(row, 3)];
  REQUIRE(counts.size() == 4);
  // Uniform per step: movie 1/2, then 1/3 or 1 over directors.
  std::map<std::vector<uint32_t>, double> expect{
      {{0, 0, 0}, kRows / 6.0},
      {{0, 0, 1}, kRows / 6.0},
      {{0, 0, 2}, kRows / 6.0},
      {{0, 1, 1}, kRows / 2.0},
  };
  double chi2 = 0;
  for (const auto& [path, exp] : expect) {
    double diff = counts[path] - exp;
    chi2 += diff * diff / exp;
  }
  CHECK(chi2 < 16.266);  // chi-squared critical value, df=3, alpha=0.001
}

TEST_CASE("dead ends retry, then pad the stuck tail") {
  HeteroGraph g;
  TypeId u = g.add_type("user", 'U', 1);
  TypeId i = g.add_type("item", 'I', 2);
  TypeId t = g.add_type("tag", 'T', 1);
  RelationId ui = g.add_relation("likes", u, i, "liked-by");
  RelationId it = g.add_relation("has", i, t, "had-by");
  g.add_edge({u, 0}, {i, 0}, ui);
  g.add_edge({u, 0}, {i, 1}, ui);
  g.add_edge({i, 0}, {t, 0}, it);  // item 1 has no tag: walking U-I-T through it dead-ends
  g.freeze();

  Metapath mp = g.parse_metapath("UIT");
  Rng rng = Rng::keyed({5});
  PathBatch b = sample_paths(g, {u, 0}, mp, 400, rng);
  uint32_t padded = 0, complete = 0;
  for (uint32_t row = 0; row < b.rows; ++row) {
    if (b.row_has_pad(row)) {
      ++padded;
      CHECK(b.at(row, 2) == pad_index(g, t));
      CHECK(b.padded(row, 2));
      CHECK_FALSE(b.padded(row, 1));
    } else {
      ++complete;
      CHECK(b.at(row, 1) == 0);
      CHECK(b.at(row, 2) == 0);
    }
  }
  CHECK(complete > 350);  // a row pads only after 8 straight dead ends, p = 2^-8
  CHECK(padded < 50);

  // with no complete walk at all, every row pads
  HeteroGraph g2;
  TypeId u2 = g2.add_type("user", 'U', 1);
  TypeId i2 = g2.add_type("item", 'I', 1);
  TypeId t2 = g2.add_type("tag", 'T', 1);
  g2.add_relation("likes", u2, i2, "liked-by");
  RelationId it2 = g2.add_relation("has", i2, t2, "had-by");
  g2.add_edge({i2, 0}, {t2, 0}, it2);  // user has no items
  g2.freeze();
  Rng rng2 = Rng::keyed({6});
  PathBatch b2 = sample_paths(g2, {u2, 0}, g2.parse_metapath("UIT"), 5, rng2);
  for (uint32_t row = 0; row < b2.rows; ++row) {
    CHECK(b2.at(row, 0) == 0);
    CHECK(b2.padded(row, 1));
    CHECK(b2.padded(row, 2));
  }
}

TEST_CASE("keyed streams make sampling order-insensitive") {
  ToyData toy = make_toy(5, 7, 3, 0, 33);
  Metapath mp = toy.g.parse_metapath("UI");
  auto sample_anchor = [&](uint32_t idx) {
    Rng rng = Rng::keyed({7, mp.anchor_type(), idx, mp.label_hash(toy.g), 0});
    return sample_paths(toy.g, {mp.anchor_type(), idx}, mp, 8, rng);
  };
  PathBatch a_first = sample_anchor(0);
  PathBatch b_then = sample_anchor(1);
  PathBatch b_first = sample_anchor(1);
  PathBatch a_then = sample_anchor(0);
  CHECK(a_first.ids == a_then.ids);
  CHECK(b_then.ids == b_first.ids);
  // and distinct epochs give distinct draws
  Rng rng_e1 = Rng::keyed({7, mp.anchor_type(), 0u, mp.label_hash(toy.g), 1});
  PathBatch a_e1 = sample_paths(toy.g, {mp.anchor_type(), 0}, mp, 8, rng_e1);
  CHECK(a_e1.ids != a_first.ids);
}

TEST_CASE("grouping by low-order prefix") {
  HeteroGraph g = umd_graph();
  Metapath umd = g.parse_metapath("UMD");
  Metapath um = umd.prefix(2);

  PathBatch low;
  low.metapath = um;
  low.anchor = {g.type_by_code('U'), 0};
  low.rows = 2;
  low.nodes = 2;
  low.ids = {0, 0, 0, 0};  // duplicate low rows collapse
  low.pad_mask.assign(4, 0);

  PathBatch high;
  high.metapath = umd;
  high.anchor = low.anchor;
  high.rows = 3;
  high.nodes = 3;
  high.ids = {0, 0, 0, 0, 1, 1, 0, 0, 2};
  high.pad_mask.assign(9, 0);

  PathGroupBuffer buf = group_paths(low, high);
  REQUIRE(buf.groups.size() == 1);
  CHECK(buf.low_nodes == 2);
  CHECK(buf.groups[0].low_path == std::vector<uint32_t>{0, 0});
  CHECK(buf.groups[0].member_rows == std::vector<uint32_t>{0, 2});
  CHECK(buf.dropped == 1);  // the (u0, m1, d1) row matches no low path
  CHECK(buf.group_of_prefix({0, 0}) == &buf.groups[0]);
  CHECK(buf.group_of_prefix({0, 1}) == nullptr);

  PathBatch wrong = low;
  wrong.metapath = g.parse_metapath("MD");
  CHECK_THROWS_AS(group_paths(wrong, high), PrefixMismatchError);
}

TEST_CASE("group_by_prefix covers every row") {
  ToyData toy = make_toy(4, 6, 3, 0, 44);
  Metapath mp = toy.g.parse_metapath("UITI");
  Rng rng = Rng::keyed({11});
  PathBatch b = sample_paths(toy.g, {mp.anchor_type(), 1}, mp, 32, rng);
  PathGroupBuffer buf = group_by_prefix(b, 2);
  CHECK(buf.dropped == 0);
  size_t members = 0;
  std::set<uint32_t> seen;
  for (const auto& grp : buf.groups) {
    members += grp.member_rows.size();
    for (uint32_t row : grp.member_rows) {
      CHECK(seen.insert(row).second);
      CHECK(b.prefix_of(row, 2) == grp.low_path);
    }
  }
  CHECK(members == b.rows);
}

TEST_SUITE_END();
