#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hinge {

// Probabilities are clamped into this closed interval before any log, both in
// the prediction head and in the loss, so the loss stays finite.
inline constexpr float kProbFloor = 1e-7f;
inline constexpr float kProbCeil = 1.0f - 1e-7f;

double log_loss(float label, float p);
double log_loss(std::span<const float> labels, std::span<const float> probs);

struct CtrMetrics {
  double acc = 0.0, f1 = 0.0, logloss = 0.0;
  uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Threshold 0.5; F1 is for the positive class.
CtrMetrics ctr_metrics(std::span<const float> labels, std::span<const float> probs);

// One candidate list in rank order, best first.
struct RankedList {
  std::vector<uint8_t> relevant;
};

double average_precision_at(const RankedList& list, size_t k);
double ndcg_at(const RankedList& list, size_t k);  // log2(rank+1) discounts

struct TopnMetrics {
  double map5 = 0.0, ndcg3 = 0.0, ndcg5 = 0.0;
  uint64_t users = 0, lists = 0;
};

// Mean within each user's lists, then across users.
TopnMetrics topn_metrics(const std::vector<std::vector<RankedList>>& per_user);

}  // namespace hinge
