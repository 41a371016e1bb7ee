#include "hinge/model.hpp"

namespace hinge {

Model::Model(const HeteroGraph& g, ModelConfig cfg, uint64_t seed) : graph_(&g), cfg_(cfg) {
  Rng rng = Rng::keyed({seed, 0x1417u});
  const uint32_t e = cfg_.embed_dim;
  for (TypeId t = 0; t < g.num_types(); ++t) {
    // count + 1 rows: the extra row is the PAD node, trained like any other.
    Tensor table = Tensor::glorot(Shape::mat(g.num_nodes(t) + 1, e), rng);
    tables_.push_back(store_.add("embed." + g.type(t).name, std::move(table)));
  }
  elem_ = ElementAttentionParams::create(store_, "elem", e, cfg_.heads, rng);
  path_ = PathAttentionParams::create(store_, "path", e, rng);
  head_ = PredictParams::create(store_, "head", e, e, rng);
  if (cfg_.mean_pool) {
    pool_w_ = store_.add("pool.w", Tensor::glorot(Shape::mat(2 * e, e), rng));
    pool_b_ = store_.add("pool.b", Tensor(Shape::vec(e)));
  }
}

std::vector<uint32_t> Model::tables_for(const PathBatch& batch) const {
  std::vector<uint32_t> out;
  out.reserve(batch.nodes);
  for (uint32_t p = 0; p < batch.nodes; ++p)
    out.push_back(tables_.at(batch.metapath.type_at(p, *graph_)));
  return out;
}

Value Model::forward(Tape& t, const PairPaths& in, ForwardDiag* diag) const {
  if (in.source.empty() || in.target.empty())
    throw ShapeMismatchError("forward needs at least one path batch per side");
  auto combos = enumerate_combinations(in.source.size(), in.target.size(), cfg_.cross);
  std::vector<Value> zrows;
  zrows.reserve(combos.size());
  for (auto [si, ti] : combos) {
    const PathBatch& sb = in.source[si];
    const PathBatch& tb = in.target[ti];
    Value se = build_embedding_matrix(t, sb, tables_for(sb));
    Value te = build_embedding_matrix(t, tb, tables_for(tb));
    if (cfg_.mean_pool) {
      Value cat = t.concat_vec(t.mean_rows_all(se), t.mean_rows_all(te));
      Value row = t.reshape(cat, Shape::mat(1, 2 * cfg_.embed_dim));
      Value z = t.nonlinearity(
          t.add_bias(t.matmul(row, t.param(pool_w_)), t.param(pool_b_)), cfg_.nonlin);
      zrows.push_back(z);
      continue;
    }
    Value h = interact(t, se, te, cfg_.route, cfg_.all_pairs);
    Tensor* alpha_sink = nullptr;
    if (diag) {
      diag->alphas.emplace_back();
      alpha_sink = &diag->alphas.back();
    }
    zrows.push_back(element_attention(t, h, elem_, cfg_.elem_temp, cfg_.nonlin, alpha_sink));
  }
  Value stack = zrows.size() == 1 ? zrows[0] : t.concat_rows(zrows);
  PathAttentionOut pa = path_attention(t, stack, path_, cfg_.path_temp, cfg_.nonlin,
                                       diag ? &diag->beta : nullptr);
  return predict(t, pa.mixed, head_, cfg_.nonlin);
}

}  // namespace hinge
