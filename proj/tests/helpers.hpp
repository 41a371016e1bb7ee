#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "hinge/dataset.hpp"
#include "hinge/graph.hpp"
#include "hinge/tape.hpp"

namespace hinge::test {

// |a - b| <= rtol * max(|a|, |b|) + atol
inline bool close(double a, double b, double rtol, double atol) {
  return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b)) + atol;
}

// How badly the tolerance is violated; <= 1 passes.
inline double tol_ratio(double a, double b, double rtol, double atol) {
  return std::abs(a - b) / (rtol * std::max(std::abs(a), std::abs(b)) + atol);
}

// user-movie-director graph from the worked neighborhood example: u_A rates
// m_A and m_B; m_A was directed by d_A, d_B, d_C and m_B by d_B. A second
// user keeps the movie rows from being singletons.
inline HeteroGraph umd_graph() {
  HeteroGraph g;
  TypeId u = g.add_type("user", 'U', 2);
  TypeId m = g.add_type("movie", 'M', 2);
  TypeId d = g.add_type("director", 'D', 3);
  RelationId um = g.add_relation("rates", u, m, "rated-by");
  RelationId md = g.add_relation("directed-by", m, d, "directed");
  g.set_node_names(u, {"u_A", "u_B"});
  g.set_node_names(m, {"m_A", "m_B"});
  g.set_node_names(d, {"d_A", "d_B", "d_C"});
  g.add_edge({u, 0}, {m, 0}, um);
  g.add_edge({u, 0}, {m, 1}, um);
  g.add_edge({u, 1}, {m, 1}, um);
  g.add_edge({m, 0}, {d, 0}, md);
  g.add_edge({m, 0}, {d, 1}, md);
  g.add_edge({m, 0}, {d, 2}, md);
  g.add_edge({m, 1}, {d, 1}, md);
  g.freeze();
  return g;
}

struct ToyData {
  HeteroGraph g;
  std::vector<LabeledPair> pairs;
};

// Deterministic random user/item/tag graph with every node connected, plus
// random labeled pairs. Small enough for fast training tests.
inline ToyData make_toy(uint32_t users, uint32_t items, uint32_t tags, uint32_t pair_count,
                        uint64_t seed) {
  ToyData out;
  HeteroGraph& g = out.g;
  TypeId u = g.add_type("user", 'U', users);
  TypeId i = g.add_type("item", 'I', items);
  TypeId t = g.add_type("tag", 'T', tags);
  RelationId ui = g.add_relation("likes", u, i, "liked-by");
  RelationId it = g.add_relation("has", i, t, "had-by");
  Rng rng = Rng::keyed({seed, 0x70ull});
  for (uint32_t a = 0; a < users; ++a) {
    uint32_t first = rng.next_index(items);
    g.add_edge({u, a}, {i, first}, ui);
    g.add_edge({u, a}, {i, rng.next_index(items)}, ui);
  }
  for (uint32_t b = 0; b < items; ++b) {
    g.add_edge({u, rng.next_index(users)}, {i, b}, ui);  // no orphan items
    g.add_edge({i, b}, {t, rng.next_index(tags)}, it);
  }
  for (uint32_t c = 0; c < tags; ++c) g.add_edge({i, rng.next_index(items)}, {t, c}, it);
  g.freeze();
  for (uint32_t p = 0; p < pair_count; ++p)
    out.pairs.push_back(
        {rng.next_index(users), rng.next_index(items), rng.next_index(2) ? 1.0f : 0.0f});
  return out;
}

struct GradCheckResult {
  double worst = 0;        // max tol_ratio over checked entries
  size_t checked = 0;
  bool ok() const { return worst <= 1.0; }
};

// Central differences on every entry of the listed parameters against the
// analytic gradients left in `analytic` by one backward pass. forward_loss
// must rebuild the graph from the store's current values and return the loss.
template <typename ForwardLoss>
GradCheckResult gradcheck(ParameterStore& store, const std::vector<uint32_t>& ids,
                          const GradBuffer& analytic, ForwardLoss&& forward_loss, float eps,
                          double rtol, double atol, size_t stride = 1) {
  GradCheckResult res;
  GradBuffer& mut = const_cast<GradBuffer&>(analytic);
  for (uint32_t id : ids) {
    Tensor& theta = store.value(id);
    const Tensor& g = mut.grad(id);  // zeros when untouched
    for (size_t k = 0; k < theta.size(); k += stride) {
      float keep = theta.at(k);
      theta.at(k) = keep + eps;
      double fp = forward_loss();
      theta.at(k) = keep - eps;
      double fm = forward_loss();
      theta.at(k) = keep;
      double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
      res.worst = std::max(res.worst, tol_ratio(numeric, g.at(k), rtol, atol));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace hinge::test
