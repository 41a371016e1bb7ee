#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hinge/tensor.hpp"

namespace hinge {

// Named trainable tensors. Registration order is the canonical order for
// checkpoints, gradient reduction, and optimizer state, so it must be
// deterministic for a given model configuration.
class ParameterStore {
 public:
  uint32_t add(const std::string& name, Tensor init);
  uint32_t find(const std::string& name) const;
  bool contains(const std::string& name) const;
  size_t size() const { return entries_.size(); }
  const std::string& name(uint32_t id) const { return entries_[id].name; }
  Tensor& value(uint32_t id) { return entries_[id].value; }
  const Tensor& value(uint32_t id) const { return entries_[id].value; }

  // Deep copy of all values (for best-epoch snapshots).
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& snap);

 private:
  struct Entry {
    std::string name;
    Tensor value;
  };
  std::vector<Entry> entries_;
};

// Per-replica gradient accumulator, one slot per parameter. Slots materialize
// on first touch so sparse passes stay cheap.
class GradBuffer {
 public:
  explicit GradBuffer(const ParameterStore& store) : store_(&store) {}
  Tensor& grad(uint32_t id);
  bool touched(uint32_t id) const { return id < grads_.size() && !grads_[id].empty(); }
  void clear();
  // dst[i] += this[i] for every touched slot, in parameter order.
  void reduce_into(GradBuffer& dst) const;

 private:
  const ParameterStore* store_;
  std::vector<Tensor> grads_;
};

class Tape;

// Handle to a forward value recorded on a tape.
struct Value {
  uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

enum class Nonlinearity { elu, relu, tanh_ };
Nonlinearity parse_nonlinearity(const std::string& name);

// Reverse-mode tape. Ops compute forward immediately and record a backward
// closure; backward() replays them in reverse. One tape serves one forward
// pass at a time and is reset between examples; it is single-threaded by
// design, with parallelism coming from replicas that share the store
// read-only and reduce their GradBuffers afterwards.
class Tape {
 public:
  Tape(const ParameterStore& store, GradBuffer& grads) : store_(&store), grads_(&grads) {}
  void reset();

  const Tensor& value(Value v) const { return vals_[v.id]; }
  const Tensor& grad(Value v) const;
  Tensor& grad_slot(Value v);  // allocates zeros on first use

  Value constant(Tensor t);
  Value param(uint32_t param_id);
  // Rows of `table` gathered by id; out shape = id_shape + [E].
  Value embed(uint32_t table_param, std::span<const uint32_t> ids, Shape id_shape);

  Value add(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, float s);
  Value add_bias(Value a, Value bias);
  // [r,c]x[c,k] -> [r,k]; a may be rank 3, treated as [d0*d1, c] and reshaped back.
  Value matmul(Value a, Value b);
  Value slice_mid(Value a, uint32_t j);             // [L,M,E] -> [L,E] at axis-1 j
  Value rows_dot(Value a, Value u);                 // [L,M,E],[L,E] -> [L,M]
  Value softmax_temp(Value scores, float temp);     // rank 1 or row-wise rank 2
  Value weighted_rows(Value alpha, Value a);        // [L,M],[L,M,E] -> [L,E]; [N],[N,E] -> [E]
  Value concat_rows(std::span<const Value> parts);  // [Li,E] -> [sum L,E]
  Value concat_vec(Value a, Value b);
  Value mean_rows_all(Value a);  // [L,I,E] -> [E]
  Value sum_all(Value a);        // -> scalar
  Value reshape(Value a, Shape s);
  Value nonlinearity(Value a, Nonlinearity f);
  Value sigmoid(Value a);
  Value clamp(Value a, float lo, float hi);
  // Binary cross-entropy against a fixed label; input is a probability scalar.
  Value bce(Value p, float label);

  // Extension point for fused ops (the interaction kernels live outside this
  // file). The closure receives the tape and must route grad(out) into
  // grad_slot(inputs[i]).
  using BackwardFn = std::function<void(Tape&, Value out, std::span<const Value> ins)>;
  Value make_node(Tensor out, std::vector<Value> inputs, BackwardFn backward);

  void backward(Value loss, float seed = 1.0f);

 private:
  Value push(Tensor t, std::vector<Value> ins, BackwardFn fn);

  const ParameterStore* store_;
  GradBuffer* grads_;
  std::vector<Tensor> vals_;
  std::vector<Tensor> vgrads_;
  struct Node {
    Value out;
    std::vector<Value> ins;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
};

// Adam with bias correction; state is kept per parameter in store order.
class Adam {
 public:
  Adam(float lr = 1e-3f, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(ParameterStore& store, GradBuffer& grads);
  float lr() const { return lr_; }
  void set_lr(float lr) { lr_ = lr; }

 private:
  float lr_, b1_, b2_, eps_;
  uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace hinge
