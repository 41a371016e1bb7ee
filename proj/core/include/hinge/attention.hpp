#pragma once

#include <string>
#include <vector>

#include "hinge/tape.hpp"

namespace hinge {

// Element-level attention over one interaction matrix [L,M,E]. Per row, the
// anchor product h_0 (position 0) is matched against every position j through
// the bilinear form (h_0 W_T) . (h_j W_S); the softmax over positions (shared
// by all heads, since W_T/W_S are head-independent) weights the per-head
// projections h_j W_C[h], whose head-average passes through the W_q output
// layer and the nonlinearity.
struct ElementAttentionParams {
  uint32_t w_t = 0, w_s = 0, w_q = 0, b_q = 0;
  std::vector<uint32_t> w_c;  // one E x E projection per head

  static ElementAttentionParams create(ParameterStore& store, const std::string& prefix,
                                       uint32_t e, uint32_t heads, Rng& rng);
};

// Returns z rows [L,E]. alpha_out, when set, receives the [L,M] weights.
Value element_attention(Tape& t, Value interaction, const ElementAttentionParams& p, float temp,
                        Nonlinearity f, Tensor* alpha_out = nullptr);

// Path-level attention over the stacked z rows of every combination: a shared
// scoring MLP produces one logit per row, and one softmax over all rows
// jointly turns them into mixture weights.
struct PathAttentionParams {
  uint32_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;

  static PathAttentionParams create(ParameterStore& store, const std::string& prefix, uint32_t e,
                                    Rng& rng);
};

struct PathAttentionOut {
  Value mixed;  // [E]
  Value beta;   // [N]
};

PathAttentionOut path_attention(Tape& t, Value zstack, const PathAttentionParams& p, float temp,
                                Nonlinearity f, Tensor* beta_out = nullptr);

// Prediction head: two-layer MLP to a single logit, sigmoid, then clamping
// into [kProbFloor, kProbCeil].
struct PredictParams {
  uint32_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;

  static PredictParams create(ParameterStore& store, const std::string& prefix, uint32_t in_dim,
                              uint32_t hidden, Rng& rng);
};

Value predict(Tape& t, Value features, const PredictParams& p, Nonlinearity f);

}  // namespace hinge
