#include "hinge/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hinge/error.hpp"

namespace hinge {

double log_loss(float label, float p) {
  double pd = std::min(kProbCeil, std::max(kProbFloor, p));
  return -(static_cast<double>(label) * std::log(pd) +
           (1.0 - static_cast<double>(label)) * std::log(1.0 - pd));
}

double log_loss(std::span<const float> labels, std::span<const float> probs) {
  if (labels.size() != probs.size() || labels.empty())
    throw ShapeMismatchError("log_loss over mismatched or empty batch");
  double acc = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) acc += log_loss(labels[i], probs[i]);
  return acc / static_cast<double>(labels.size());
}

CtrMetrics ctr_metrics(std::span<const float> labels, std::span<const float> probs) {
  if (labels.size() != probs.size() || labels.empty())
    throw ShapeMismatchError("ctr_metrics over mismatched or empty batch");
  CtrMetrics m;
  for (size_t i = 0; i < labels.size(); ++i) {
    bool pos = labels[i] >= 0.5f;
    bool pred = probs[i] >= 0.5f;
    if (pos && pred) m.tp++;
    else if (!pos && pred) m.fp++;
    else if (pos && !pred) m.fn++;
    else m.tn++;
  }
  double n = static_cast<double>(labels.size());
  m.acc = static_cast<double>(m.tp + m.tn) / n;
  double denom_p = static_cast<double>(m.tp + m.fp);
  double denom_r = static_cast<double>(m.tp + m.fn);
  double prec = denom_p > 0 ? m.tp / denom_p : 0.0;
  double rec = denom_r > 0 ? m.tp / denom_r : 0.0;
  m.f1 = (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  m.logloss = log_loss(labels, probs);
  return m;
}

double average_precision_at(const RankedList& list, size_t k) {
  size_t total_rel = 0;
  for (uint8_t r : list.relevant) total_rel += r;
  if (total_rel == 0) return 0.0;
  size_t cutoff = std::min(k, list.relevant.size());
  size_t hits = 0;
  double acc = 0.0;
  for (size_t i = 0; i < cutoff; ++i) {
    if (list.relevant[i]) {
      hits++;
      acc += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return acc / static_cast<double>(std::min(total_rel, k));
}

double ndcg_at(const RankedList& list, size_t k) {
  size_t total_rel = 0;
  for (uint8_t r : list.relevant) total_rel += r;
  if (total_rel == 0) return 0.0;
  size_t cutoff = std::min(k, list.relevant.size());
  double dcg = 0.0;
  for (size_t i = 0; i < cutoff; ++i)
    if (list.relevant[i]) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  double idcg = 0.0;
  for (size_t i = 0; i < std::min(cutoff, total_rel); ++i)
    idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  return dcg / idcg;
}

TopnMetrics topn_metrics(const std::vector<std::vector<RankedList>>& per_user) {
  TopnMetrics m;
  for (const auto& lists : per_user) {
    if (lists.empty()) continue;
    double map5 = 0.0, n3 = 0.0, n5 = 0.0;
    for (const auto& l : lists) {
      map5 += average_precision_at(l, 5);
      n3 += ndcg_at(l, 3);
      n5 += ndcg_at(l, 5);
      m.lists++;
    }
    double cnt = static_cast<double>(lists.size());
    m.map5 += map5 / cnt;
    m.ndcg3 += n3 / cnt;
    m.ndcg5 += n5 / cnt;
    m.users++;
  }
  if (m.users > 0) {
    m.map5 /= static_cast<double>(m.users);
    m.ndcg3 /= static_cast<double>(m.users);
    m.ndcg5 /= static_cast<double>(m.users);
  }
  return m;
}

}  // namespace hinge
