#include "hinge/attention.hpp"

#include "hinge/metrics.hpp"

namespace hinge {

ElementAttentionParams ElementAttentionParams::create(ParameterStore& store,
                                                      const std::string& prefix, uint32_t e,
                                                      uint32_t heads, Rng& rng) {
  if (heads == 0) throw ShapeMismatchError("element attention needs at least one head");
  ElementAttentionParams p;
  p.w_t = store.add(prefix + ".w_t", Tensor::glorot(Shape::mat(e, e), rng));
  p.w_s = store.add(prefix + ".w_s", Tensor::glorot(Shape::mat(e, e), rng));
  for (uint32_t h = 0; h < heads; ++h)
    p.w_c.push_back(store.add(prefix + ".w_c" + std::to_string(h),
                              Tensor::glorot(Shape::mat(e, e), rng)));
  p.w_q = store.add(prefix + ".w_q", Tensor::glorot(Shape::mat(e, e), rng));
  p.b_q = store.add(prefix + ".b_q", Tensor(Shape::vec(e)));
  return p;
}

Value element_attention(Tape& t, Value interaction, const ElementAttentionParams& p, float temp,
                        Nonlinearity f, Tensor* alpha_out) {
  const Shape& hs = t.value(interaction).shape();
  if (hs.rank != 3) throw ShapeMismatchError("element_attention expects [L,M,E]");
  Value h0 = t.slice_mid(interaction, 0);
  Value u = t.matmul(h0, t.param(p.w_t));
  Value proj = t.matmul(interaction, t.param(p.w_s));
  Value scores = t.rows_dot(proj, u);
  Value alpha = t.softmax_temp(scores, temp);
  if (alpha_out) *alpha_out = t.value(alpha).clone();
  // sum_j alpha_j (h_j W_C[h]) == (sum_j alpha_j h_j) W_C[h]
  Value mix = t.weighted_rows(alpha, interaction);
  Value headsum;
  for (size_t h = 0; h < p.w_c.size(); ++h) {
    Value y = t.matmul(mix, t.param(p.w_c[h]));
    headsum = h == 0 ? y : t.add(headsum, y);
  }
  Value avg = t.scale(headsum, 1.0f / static_cast<float>(p.w_c.size()));
  return t.nonlinearity(t.add_bias(t.matmul(avg, t.param(p.w_q)), t.param(p.b_q)), f);
}

PathAttentionParams PathAttentionParams::create(ParameterStore& store, const std::string& prefix,
                                                uint32_t e, Rng& rng) {
  PathAttentionParams p;
  p.w1 = store.add(prefix + ".w1", Tensor::glorot(Shape::mat(e, e), rng));
  p.b1 = store.add(prefix + ".b1", Tensor(Shape::vec(e)));
  p.w2 = store.add(prefix + ".w2", Tensor::glorot(Shape::mat(e, 1), rng));
  p.b2 = store.add(prefix + ".b2", Tensor(Shape::vec(1)));
  return p;
}

PathAttentionOut path_attention(Tape& t, Value zstack, const PathAttentionParams& p, float temp,
                                Nonlinearity f, Tensor* beta_out) {
  // copy, not reference: pushing nodes below may reallocate the tape's values
  const Shape zs = t.value(zstack).shape();
  if (zs.rank != 2) throw ShapeMismatchError("path_attention expects [N,E]");
  Value hidden = t.nonlinearity(t.add_bias(t.matmul(zstack, t.param(p.w1)), t.param(p.b1)), f);
  Value logits = t.add_bias(t.matmul(hidden, t.param(p.w2)), t.param(p.b2));
  Value flat = t.reshape(logits, Shape::vec(zs.d[0]));
  Value beta = t.softmax_temp(flat, temp);
  if (beta_out) *beta_out = t.value(beta).clone();
  Value mixed = t.weighted_rows(beta, zstack);
  return {mixed, beta};
}

PredictParams PredictParams::create(ParameterStore& store, const std::string& prefix,
                                    uint32_t in_dim, uint32_t hidden, Rng& rng) {
  PredictParams p;
  p.w1 = store.add(prefix + ".w1", Tensor::glorot(Shape::mat(in_dim, hidden), rng));
  p.b1 = store.add(prefix + ".b1", Tensor(Shape::vec(hidden)));
  p.w2 = store.add(prefix + ".w2", Tensor::glorot(Shape::mat(hidden, 1), rng));
  p.b2 = store.add(prefix + ".b2", Tensor(Shape::vec(1)));
  return p;
}

Value predict(Tape& t, Value features, const PredictParams& p, Nonlinearity f) {
  const Shape& fs = t.value(features).shape();
  if (fs.rank != 1) throw ShapeMismatchError("predict expects a feature vector");
  Value row = t.reshape(features, Shape::mat(1, fs.d[0]));
  Value hidden = t.nonlinearity(t.add_bias(t.matmul(row, t.param(p.w1)), t.param(p.b1)), f);
  Value logit = t.add_bias(t.matmul(hidden, t.param(p.w2)), t.param(p.b2));
  Value prob = t.sigmoid(t.reshape(logit, Shape::scalar()));
  return t.clamp(prob, kProbFloor, kProbCeil);
}

}  // namespace hinge
