#include "hinge/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hinge {

FilterModel::FilterModel(const HeteroGraph& g, ModelConfig cfg, uint64_t seed)
    : model_(g, cfg, Rng::mix(seed, 0x5e1ec7u)) {}

Value FilterModel::forward(Tape& t, const PairPaths& low, ForwardDiag* diag) const {
  for (const auto& b : low.source)
    if (b.nodes != 2) throw NotLowOrderError("source batch has " + std::to_string(b.nodes) +
                                             " nodes per path");
  for (const auto& b : low.target)
    if (b.nodes != 2) throw NotLowOrderError("target batch has " + std::to_string(b.nodes) +
                                             " nodes per path");
  return model_.forward(t, low, diag);
}

PathBatch truncate_batch(const PathBatch& batch, uint32_t n_nodes) {
  if (n_nodes == 0 || n_nodes > batch.nodes)
    throw IndexOutOfRangeError("truncate to " + std::to_string(n_nodes) + " nodes");
  PathBatch out;
  out.metapath = batch.metapath.prefix(n_nodes);
  out.anchor = batch.anchor;
  out.rows = batch.rows;
  out.nodes = n_nodes;
  out.ids.reserve(static_cast<size_t>(batch.rows) * n_nodes);
  out.pad_mask.reserve(static_cast<size_t>(batch.rows) * n_nodes);
  for (uint32_t r = 0; r < batch.rows; ++r)
    for (uint32_t p = 0; p < n_nodes; ++p) {
      out.ids.push_back(batch.at(r, p));
      out.pad_mask.push_back(batch.padded(r, p) ? 1 : 0);
    }
  return out;
}

PathBatch select_rows(const PathBatch& batch, std::span<const uint32_t> rows) {
  PathBatch out;
  out.metapath = batch.metapath;
  out.anchor = batch.anchor;
  out.rows = static_cast<uint32_t>(rows.size());
  out.nodes = batch.nodes;
  out.ids.reserve(rows.size() * batch.nodes);
  out.pad_mask.reserve(rows.size() * batch.nodes);
  for (uint32_t r : rows) {
    if (r >= batch.rows) throw IndexOutOfRangeError("select_rows row " + std::to_string(r));
    for (uint32_t p = 0; p < batch.nodes; ++p) {
      out.ids.push_back(batch.at(r, p));
      out.pad_mask.push_back(batch.padded(r, p) ? 1 : 0);
    }
  }
  return out;
}

SampleRates ns_score(const FilterModel& filter, PathGroupBuffer& src, PathGroupBuffer& tgt) {
  if (src.high.rows != tgt.high.rows)
    throw ShapeMismatchError("ns_score needs aligned candidate pools, got " +
                             std::to_string(src.high.rows) + " and " +
                             std::to_string(tgt.high.rows) + " rows");
  PairPaths low;
  low.source.push_back(truncate_batch(src.high, src.low_nodes));
  low.target.push_back(truncate_batch(tgt.high, tgt.low_nodes));

  // Forward only; the beta read-off needs no gradients.
  GradBuffer scratch(filter.model().params());
  Tape tape(filter.model().params(), scratch);
  ForwardDiag diag;
  filter.forward(tape, low, &diag);

  SampleRates rates;
  rates.rows.assign(diag.beta.data(), diag.beta.data() + diag.beta.size());
  auto fold = [&rates](PathGroupBuffer& buf, std::vector<float>& out) {
    out.assign(buf.groups.size(), 0.0f);
    for (size_t gi = 0; gi < buf.groups.size(); ++gi) {
      double acc = 0.0;
      for (uint32_t row : buf.groups[gi].member_rows) acc += rates.rows[row];
      out[gi] = static_cast<float>(acc);
      buf.groups[gi].sample_rate = out[gi];
    }
  };
  fold(src, rates.source);
  fold(tgt, rates.target);
  return rates;
}

SelectionPlan ns_select(const PathGroupBuffer& buf, uint32_t budget, Rng& rng) {
  const size_t g = buf.groups.size();
  uint64_t available = 0;
  for (const auto& grp : buf.groups) available += grp.member_rows.size();
  if (budget > available)
    throw BudgetError("budget " + std::to_string(budget) + " exceeds " +
                      std::to_string(available) + " candidate paths");

  std::vector<double> weight(g);
  double total = 0.0;
  for (size_t i = 0; i < g; ++i) {
    weight[i] = std::max(0.0f, buf.groups[i].sample_rate);
    total += weight[i];
  }
  if (total <= 0.0) {
    std::fill(weight.begin(), weight.end(), 1.0);  // unscored: uniform
    total = static_cast<double>(g);
  }

  SelectionPlan plan;
  plan.counts.assign(g, 0);
  std::vector<double> quota(g);
  for (size_t i = 0; i < g; ++i) {
    quota[i] = static_cast<double>(budget) * weight[i] / total;
    plan.counts[i] = static_cast<uint32_t>(
        std::min<double>(std::floor(quota[i]), static_cast<double>(buf.groups[i].member_rows.size())));
  }
  uint64_t assigned = std::accumulate(plan.counts.begin(), plan.counts.end(), uint64_t{0});
  // Hand out the remainder one path at a time to the group with the largest
  // unmet quota that still has capacity; ties go to the larger weight, then to
  // the lower index. Deterministic for fixed inputs.
  while (assigned < budget) {
    ptrdiff_t best = -1;
    double best_deficit = 0.0;
    for (size_t i = 0; i < g; ++i) {
      if (plan.counts[i] >= buf.groups[i].member_rows.size()) continue;
      double deficit = quota[i] - static_cast<double>(plan.counts[i]);
      if (best < 0 || deficit > best_deficit ||
          (deficit == best_deficit && weight[i] > weight[best])) {
        best = static_cast<ptrdiff_t>(i);
        best_deficit = deficit;
      }
    }
    plan.counts[best]++;
    assigned++;
  }

  for (size_t i = 0; i < g; ++i) {
    auto pool = buf.groups[i].member_rows;  // copy; draw without replacement
    uint32_t want = plan.counts[i];
    for (uint32_t k = 0; k < want; ++k) {
      uint32_t j = k + rng.next_index(static_cast<uint32_t>(pool.size() - k));
      std::swap(pool[k], pool[j]);
    }
    plan.survivors.insert(plan.survivors.end(), pool.begin(), pool.begin() + want);
  }
  std::sort(plan.survivors.begin(), plan.survivors.end());
  return plan;
}

}  // namespace hinge
