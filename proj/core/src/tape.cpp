#include "hinge/tape.hpp"

#include <cmath>

namespace hinge {

uint32_t ParameterStore::add(const std::string& name, Tensor init) {
  for (const auto& e : entries_)
    if (e.name == name) throw DuplicateNameError("parameter " + name);
  entries_.push_back({name, std::move(init)});
  return static_cast<uint32_t>(entries_.size() - 1);
}

uint32_t ParameterStore::find(const std::string& name) const {
  for (size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return static_cast<uint32_t>(i);
  throw UnknownNameError("parameter " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::vector<Tensor> ParameterStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value.clone());
  return out;
}

void ParameterStore::restore(const std::vector<Tensor>& snap) {
  if (snap.size() != entries_.size()) throw ShapeMismatchError("snapshot size mismatch");
  for (size_t i = 0; i < snap.size(); ++i) {
    if (!(snap[i].shape() == entries_[i].value.shape()))
      throw ShapeMismatchError("snapshot shape mismatch for " + entries_[i].name);
    std::copy(snap[i].data(), snap[i].data() + snap[i].size(), entries_[i].value.data());
  }
}

Tensor& GradBuffer::grad(uint32_t id) {
  if (id >= store_->size()) throw IndexOutOfRangeError("gradient for unknown parameter");
  if (grads_.size() < store_->size()) grads_.resize(store_->size());
  if (grads_[id].empty()) grads_[id] = Tensor(store_->value(id).shape());
  return grads_[id];
}

void GradBuffer::clear() {
  for (auto& g : grads_)
    if (!g.empty()) g.zero();
}

void GradBuffer::reduce_into(GradBuffer& dst) const {
  for (size_t id = 0; id < grads_.size(); ++id)
    if (!grads_[id].empty()) dst.grad(static_cast<uint32_t>(id)).add_in_place(grads_[id]);
}

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "elu") return Nonlinearity::elu;
  if (name == "relu") return Nonlinearity::relu;
  if (name == "tanh") return Nonlinearity::tanh_;
  throw ConfigError("unknown nonlinearity '" + name + "'");
}

void Tape::reset() {
  vals_.clear();
  vgrads_.clear();
  nodes_.clear();
}

const Tensor& Tape::grad(Value v) const {
  static const Tensor empty;
  if (v.id >= vgrads_.size() || vgrads_[v.id].empty()) return empty;
  return vgrads_[v.id];
}

Tensor& Tape::grad_slot(Value v) {
  if (vgrads_.size() < vals_.size()) vgrads_.resize(vals_.size());
  if (vgrads_[v.id].empty()) vgrads_[v.id] = Tensor(vals_[v.id].shape());
  return vgrads_[v.id];
}

Value Tape::push(Tensor t, std::vector<Value> ins, BackwardFn fn) {
  Value v{static_cast<uint32_t>(vals_.size())};
  vals_.push_back(std::move(t));
  nodes_.push_back({v, std::move(ins), std::move(fn)});
  return v;
}

Value Tape::constant(Tensor t) { return push(std::move(t), {}, nullptr); }

Value Tape::param(uint32_t param_id) {
  Tensor view = store_->value(param_id);  // shares storage
  return push(std::move(view), {}, [this, param_id](Tape& t, Value out, std::span<const Value>) {
    grads_->grad(param_id).add_in_place(t.grad(out));
  });
}

Value Tape::embed(uint32_t table_param, std::span<const uint32_t> ids, Shape id_shape) {
  const Tensor& table = store_->value(table_param);
  if (table.shape().rank != 2) throw ShapeMismatchError("embed table must be rank 2");
  if (ids.size() != id_shape.numel())
    throw ShapeMismatchError("embed: " + std::to_string(ids.size()) + " ids for shape " +
                             id_shape.str());
  const uint32_t rows = table.shape().d[0];
  const uint32_t e = table.shape().d[1];
  if (id_shape.rank > 2) throw ShapeMismatchError("embed id shape rank > 2");
  Shape out = id_shape.rank == 1 ? Shape::mat(id_shape.d[0], e)
                                 : Shape::cube(id_shape.d[0], id_shape.d[1], e);
  Tensor y(out);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows)
      throw IndexOutOfRangeError("embed id " + std::to_string(ids[i]) + " >= " +
                                 std::to_string(rows));
    std::copy(table.data() + static_cast<size_t>(ids[i]) * e,
              table.data() + static_cast<size_t>(ids[i] + 1) * e, y.data() + i * e);
  }
  std::vector<uint32_t> idv(ids.begin(), ids.end());
  return push(std::move(y), {},
              [this, table_param, idv = std::move(idv), e](Tape& t, Value out,
                                                           std::span<const Value>) {
                Tensor& g = grads_->grad(table_param);
                const Tensor& gy = t.grad(out);
                for (size_t i = 0; i < idv.size(); ++i) {
                  float* dst = g.data() + static_cast<size_t>(idv[i]) * e;
                  const float* src = gy.data() + i * e;
                  for (uint32_t k = 0; k < e; ++k) dst[k] += src[k];
                }
              });
}

Value Tape::add(Value a, Value b) {
  const Tensor& ta = vals_[a.id];
  const Tensor& tb = vals_[b.id];
  if (!(ta.shape() == tb.shape()))
    throw ShapeMismatchError("add " + ta.shape().str() + " vs " + tb.shape().str());
  Tensor y(ta.shape());
  for (size_t i = 0; i < y.size(); ++i) y.at(i) = ta.at(i) + tb.at(i);
  return push(std::move(y), {a, b}, [](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    t.grad_slot(in[0]).add_in_place(g);
    t.grad_slot(in[1]).add_in_place(g);
  });
}

Value Tape::mul(Value a, Value b) {
  const Tensor& ta = vals_[a.id];
  const Tensor& tb = vals_[b.id];
  if (!(ta.shape() == tb.shape()))
    throw ShapeMismatchError("mul " + ta.shape().str() + " vs " + tb.shape().str());
  Tensor y(ta.shape());
  for (size_t i = 0; i < y.size(); ++i) y.at(i) = ta.at(i) * tb.at(i);
  return push(std::move(y), {a, b}, [](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& ta = t.value(in[0]);
    const Tensor& tb = t.value(in[1]);
    Tensor& da = t.grad_slot(in[0]);
    Tensor& db = t.grad_slot(in[1]);
    for (size_t i = 0; i < g.size(); ++i) {
      da.at(i) += g.at(i) * tb.at(i);
      db.at(i) += g.at(i) * ta.at(i);
    }
  });
}

Value Tape::scale(Value a, float s) {
  const Tensor& ta = vals_[a.id];
  Tensor y(ta.shape());
  for (size_t i = 0; i < y.size(); ++i) y.at(i) = ta.at(i) * s;
  return push(std::move(y), {a}, [s](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    Tensor& da = t.grad_slot(in[0]);
    for (size_t i = 0; i < g.size(); ++i) da.at(i) += g.at(i) * s;
  });
}

Value Tape::add_bias(Value a, Value bias) {
  const Tensor& ta = vals_[a.id];
  const Tensor& tb = vals_[bias.id];
  uint32_t e = ta.shape().inner();
  if (tb.shape().rank != 1 || tb.shape().d[0] != e)
    throw ShapeMismatchError("add_bias " + ta.shape().str() + " + " + tb.shape().str());
  Tensor y(ta.shape());
  size_t rows = ta.size() / e;
  for (size_t r = 0; r < rows; ++r)
    for (uint32_t k = 0; k < e; ++k) y.at(r * e + k) = ta.at(r * e + k) + tb.at(k);
  return push(std::move(y), {a, bias}, [e](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    Tensor& da = t.grad_slot(in[0]);
    Tensor& db = t.grad_slot(in[1]);
    size_t rows = g.size() / e;
    da.add_in_place(g);
    for (uint32_t k = 0; k < e; ++k) {
      double acc = 0.0;
      for (size_t r = 0; r < rows; ++r) acc += g.at(r * e + k);
      db.at(k) += static_cast<float>(acc);
    }
  });
}

namespace {

// C[r,k] (+)= A[r,c] * B[c,k], accumulating each output in 64-bit.
void mm_nn(const float* a, const float* b, float* c, size_t r, size_t cc, size_t k,
           std::vector<double>& scratch) {
  scratch.assign(k, 0.0);
  for (size_t i = 0; i < r; ++i) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    const float* arow = a + i * cc;
    for (size_t j = 0; j < cc; ++j) {
      double av = arow[j];
      const float* brow = b + j * k;
      for (size_t x = 0; x < k; ++x) scratch[x] += av * brow[x];
    }
    float* crow = c + i * k;
    for (size_t x = 0; x < k; ++x) crow[x] = static_cast<float>(scratch[x]);
  }
}

}  // namespace

Value Tape::matmul(Value a, Value b) {
  const Tensor& ta = vals_[a.id];
  const Tensor& tb = vals_[b.id];
  if (tb.shape().rank != 2) throw ShapeMismatchError("matmul rhs must be rank 2");
  uint32_t c = tb.shape().d[0];
  uint32_t k = tb.shape().d[1];
  if (ta.shape().inner() != c)
    throw ShapeMismatchError("matmul " + ta.shape().str() + " x " + tb.shape().str());
  size_t rows = ta.size() / c;
  Shape out;
  if (ta.shape().rank == 1)
    out = Shape::vec(k);  // treated as [1,c]
  else if (ta.shape().rank == 2)
    out = Shape::mat(ta.shape().d[0], k);
  else
    out = Shape::cube(ta.shape().d[0], ta.shape().d[1], k);
  Tensor y(out);
  std::vector<double> scratch;
  mm_nn(ta.data(), tb.data(), y.data(), rows, c, k, scratch);
  return push(std::move(y), {a, b}, [c, k, rows](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& ta = t.value(in[0]);
    const Tensor& tb = t.value(in[1]);
    Tensor& da = t.grad_slot(in[0]);
    Tensor& db = t.grad_slot(in[1]);
    // dA[i,j] += sum_x G[i,x] B[j,x]
    for (size_t i = 0; i < rows; ++i) {
      const float* grow = g.data() + i * k;
      float* darow = da.data() + i * c;
      for (uint32_t j = 0; j < c; ++j) {
        const float* brow = tb.data() + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (uint32_t x = 0; x < k; ++x) acc += static_cast<double>(grow[x]) * brow[x];
        darow[j] += static_cast<float>(acc);
      }
    }
    // dB[j,x] += sum_i A[i,j] G[i,x]
    std::vector<double> dbacc(static_cast<size_t>(c) * k, 0.0);
    for (size_t i = 0; i < rows; ++i) {
      const float* arow = ta.data() + i * c;
      const float* grow = g.data() + i * k;
      for (uint32_t j = 0; j < c; ++j) {
        double av = arow[j];
        double* dbrow = dbacc.data() + static_cast<size_t>(j) * k;
        for (uint32_t x = 0; x < k; ++x) dbrow[x] += av * grow[x];
      }
    }
    for (size_t i = 0; i < dbacc.size(); ++i) db.at(i) += static_cast<float>(dbacc[i]);
  });
}

Value Tape::slice_mid(Value a, uint32_t j) {
  const Tensor& ta = vals_[a.id];
  if (ta.shape().rank != 3) throw ShapeMismatchError("slice_mid needs rank 3");
  uint32_t l = ta.shape().d[0], m = ta.shape().d[1], e = ta.shape().d[2];
  if (j >= m) throw IndexOutOfRangeError("slice_mid index " + std::to_string(j));
  Tensor y(Shape::mat(l, e));
  for (uint32_t i = 0; i < l; ++i)
    std::copy(ta.data() + (static_cast<size_t>(i) * m + j) * e,
              ta.data() + (static_cast<size_t>(i) * m + j + 1) * e, y.data() + static_cast<size_t>(i) * e);
  return push(std::move(y), {a}, [j, m, e](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    Tensor& da = t.grad_slot(in[0]);
    uint32_t l = g.shape().d[0];
    for (uint32_t i = 0; i < l; ++i) {
      float* dst = da.data() + (static_cast<size_t>(i) * m + j) * e;
      const float* src = g.data() + static_cast<size_t>(i) * e;
      for (uint32_t x = 0; x < e; ++x) dst[x] += src[x];
    }
  });
}

Value Tape::rows_dot(Value a, Value u) {
  const Tensor& ta = vals_[a.id];
  const Tensor& tu = vals_[u.id];
  if (ta.shape().rank != 3 || tu.shape().rank != 2)
    throw ShapeMismatchError("rows_dot " + ta.shape().str() + " with " + tu.shape().str());
  uint32_t l = ta.shape().d[0], m = ta.shape().d[1], e = ta.shape().d[2];
  if (tu.shape().d[0] != l || tu.shape().d[1] != e)
    throw ShapeMismatchError("rows_dot " + ta.shape().str() + " with " + tu.shape().str());
  Tensor y(Shape::mat(l, m));
  for (uint32_t i = 0; i < l; ++i) {
    const float* urow = tu.data() + static_cast<size_t>(i) * e;
    for (uint32_t jm = 0; jm < m; ++jm) {
      const float* arow = ta.data() + (static_cast<size_t>(i) * m + jm) * e;
      double acc = 0.0;
      for (uint32_t x = 0; x < e; ++x) acc += static_cast<double>(arow[x]) * urow[x];
      y.at(i, jm) = static_cast<float>(acc);
    }
  }
  return push(std::move(y), {a, u}, [l, m, e](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& ta = t.value(in[0]);
    const Tensor& tu = t.value(in[1]);
    Tensor& da = t.grad_slot(in[0]);
    Tensor& du = t.grad_slot(in[1]);
    std::vector<double> acc(e);
    for (uint32_t i = 0; i < l; ++i) {
      const float* urow = tu.data() + static_cast<size_t>(i) * e;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (uint32_t jm = 0; jm < m; ++jm) {
        float gv = g.at(i, jm);
        const float* arow = ta.data() + (static_cast<size_t>(i) * m + jm) * e;
        float* darow = da.data() + (static_cast<size_t>(i) * m + jm) * e;
        for (uint32_t x = 0; x < e; ++x) {
          darow[x] += gv * urow[x];
          acc[x] += static_cast<double>(gv) * arow[x];
        }
      }
      float* durow = du.data() + static_cast<size_t>(i) * e;
      for (uint32_t x = 0; x < e; ++x) durow[x] += static_cast<float>(acc[x]);
    }
  });
}

Value Tape::softmax_temp(Value scores, float temp) {
  if (temp <= 0.0f)
    throw NonPositiveTemperatureError("softmax temperature " + std::to_string(temp));
  const Tensor& ts = vals_[scores.id];
  if (ts.shape().rank > 2) throw ShapeMismatchError("softmax_temp rank > 2");
  uint32_t cols = ts.shape().inner();
  size_t rows = ts.size() / cols;
  Tensor y(ts.shape());
  for (size_t r = 0; r < rows; ++r) {
    const float* s = ts.data() + r * cols;
    float* o = y.data() + r * cols;
    float mx = s[0];
    for (uint32_t j = 1; j < cols; ++j) mx = std::max(mx, s[j]);
    double sum = 0.0;
    for (uint32_t j = 0; j < cols; ++j) {
      double ex = std::exp(static_cast<double>(s[j] - mx) / temp);
      o[j] = static_cast<float>(ex);
      sum += ex;
    }
    double inv = 1.0 / sum;
    for (uint32_t j = 0; j < cols; ++j) o[j] = static_cast<float>(o[j] * inv);
  }
  return push(std::move(y), {scores}, [temp, cols, rows](Tape& t, Value out,
                                                         std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& a = t.value(out);
    Tensor& ds = t.grad_slot(in[0]);
    for (size_t r = 0; r < rows; ++r) {
      const float* gr = g.data() + r * cols;
      const float* ar = a.data() + r * cols;
      float* dr = ds.data() + r * cols;
      double dot = 0.0;
      for (uint32_t j = 0; j < cols; ++j) dot += static_cast<double>(gr[j]) * ar[j];
      for (uint32_t j = 0; j < cols; ++j)
        dr[j] += static_cast<float>(ar[j] * (gr[j] - dot) / temp);
    }
  });
}

Value Tape::weighted_rows(Value alpha, Value a) {
  const Tensor& tw = vals_[alpha.id];
  const Tensor& ta = vals_[a.id];
  uint32_t l, m, e;
  if (tw.shape().rank == 2 && ta.shape().rank == 3) {
    l = ta.shape().d[0];
    m = ta.shape().d[1];
    e = ta.shape().d[2];
    if (tw.shape().d[0] != l || tw.shape().d[1] != m)
      throw ShapeMismatchError("weighted_rows " + tw.shape().str() + " with " + ta.shape().str());
  } else if (tw.shape().rank == 1 && ta.shape().rank == 2) {
    l = 1;
    m = ta.shape().d[0];
    e = ta.shape().d[1];
    if (tw.shape().d[0] != m)
      throw ShapeMismatchError("weighted_rows " + tw.shape().str() + " with " + ta.shape().str());
  } else {
    throw ShapeMismatchError("weighted_rows " + tw.shape().str() + " with " + ta.shape().str());
  }
  Tensor y(l == 1 && tw.shape().rank == 1 ? Shape::vec(e) : Shape::mat(l, e));
  std::vector<double> acc(e);
  for (uint32_t i = 0; i < l; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (uint32_t jm = 0; jm < m; ++jm) {
      double wv = tw.at(static_cast<size_t>(i) * m + jm);
      const float* arow = ta.data() + (static_cast<size_t>(i) * m + jm) * e;
      for (uint32_t x = 0; x < e; ++x) acc[x] += wv * arow[x];
    }
    float* orow = y.data() + static_cast<size_t>(i) * e;
    for (uint32_t x = 0; x < e; ++x) orow[x] = static_cast<float>(acc[x]);
  }
  return push(std::move(y), {alpha, a}, [l, m, e](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& tw = t.value(in[0]);
    const Tensor& ta = t.value(in[1]);
    Tensor& dw = t.grad_slot(in[0]);
    Tensor& da = t.grad_slot(in[1]);
    for (uint32_t i = 0; i < l; ++i) {
      const float* grow = g.data() + static_cast<size_t>(i) * e;
      for (uint32_t jm = 0; jm < m; ++jm) {
        const float* arow = ta.data() + (static_cast<size_t>(i) * m + jm) * e;
        float* darow = da.data() + (static_cast<size_t>(i) * m + jm) * e;
        float wv = tw.at(static_cast<size_t>(i) * m + jm);
        double acc = 0.0;
        for (uint32_t x = 0; x < e; ++x) {
          acc += static_cast<double>(grow[x]) * arow[x];
          darow[x] += wv * grow[x];
        }
        dw.at(static_cast<size_t>(i) * m + jm) += static_cast<float>(acc);
      }
    }
  });
}

Value Tape::concat_rows(std::span<const Value> parts) {
  if (parts.empty()) throw ShapeMismatchError("concat_rows of nothing");
  uint32_t e = vals_[parts[0].id].shape().inner();
  uint32_t total = 0;
  for (Value v : parts) {
    const Tensor& t = vals_[v.id];
    if (t.shape().rank != 2 || t.shape().d[1] != e)
      throw ShapeMismatchError("concat_rows part " + t.shape().str());
    total += t.shape().d[0];
  }
  Tensor y(Shape::mat(total, e));
  size_t off = 0;
  for (Value v : parts) {
    const Tensor& t = vals_[v.id];
    std::copy(t.data(), t.data() + t.size(), y.data() + off);
    off += t.size();
  }
  std::vector<Value> ins(parts.begin(), parts.end());
  return push(std::move(y), std::move(ins), [](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    size_t off = 0;
    for (Value v : in) {
      Tensor& d = t.grad_slot(v);
      for (size_t i = 0; i < d.size(); ++i) d.at(i) += g.at(off + i);
      off += d.size();
    }
  });
}

Value Tape::concat_vec(Value a, Value b) {
  const Tensor& ta = vals_[a.id];
  const Tensor& tb = vals_[b.id];
  if (ta.shape().rank != 1 || tb.shape().rank != 1)
    throw ShapeMismatchError("concat_vec needs rank-1 inputs");
  Tensor y(Shape::vec(ta.shape().d[0] + tb.shape().d[0]));
  std::copy(ta.data(), ta.data() + ta.size(), y.data());
  std::copy(tb.data(), tb.data() + tb.size(), y.data() + ta.size());
  return push(std::move(y), {a, b}, [](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    Tensor& da = t.grad_slot(in[0]);
    Tensor& db = t.grad_slot(in[1]);
    for (size_t i = 0; i < da.size(); ++i) da.at(i) += g.at(i);
    for (size_t i = 0; i < db.size(); ++i) db.at(i) += g.at(da.size() + i);
  });
}

Value Tape::mean_rows_all(Value a) {
  const Tensor& ta = vals_[a.id];
  if (ta.shape().rank < 2) throw ShapeMismatchError("mean_rows_all needs rank >= 2");
  uint32_t e = ta.shape().inner();
  size_t rows = ta.size() / e;
  Tensor y(Shape::vec(e));
  std::vector<double> acc(e, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const float* row = ta.data() + r * e;
    for (uint32_t x = 0; x < e; ++x) acc[x] += row[x];
  }
  for (uint32_t x = 0; x < e; ++x) y.at(x) = static_cast<float>(acc[x] / static_cast<double>(rows));
  return push(std::move(y), {a}, [e, rows](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    Tensor& da = t.grad_slot(in[0]);
    float inv = 1.0f / static_cast<float>(rows);
    for (size_t r = 0; r < rows; ++r) {
      float* row = da.data() + r * e;
      for (uint32_t x = 0; x < e; ++x) row[x] += g.at(x) * inv;
    }
  });
}

Value Tape::sum_all(Value a) {
  const Tensor& ta = vals_[a.id];
  double acc = 0.0;
  for (size_t i = 0; i < ta.size(); ++i) acc += ta.at(i);
  Tensor y(Shape::scalar());
  y.at(0) = static_cast<float>(acc);
  return push(std::move(y), {a}, [](Tape& t, Value out, std::span<const Value> in) {
    float g = t.grad(out).at(0);
    Tensor& da = t.grad_slot(in[0]);
    for (size_t i = 0; i < da.size(); ++i) da.at(i) += g;
  });
}

Value Tape::reshape(Value a, Shape s) {
  Tensor y = vals_[a.id].reshaped(s);
  return push(std::move(y), {a}, [](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    Tensor& da = t.grad_slot(in[0]);
    for (size_t i = 0; i < g.size(); ++i) da.at(i) += g.at(i);
  });
}

Value Tape::nonlinearity(Value a, Nonlinearity f) {
  const Tensor& ta = vals_[a.id];
  Tensor y(ta.shape());
  switch (f) {
    case Nonlinearity::elu:
      for (size_t i = 0; i < y.size(); ++i) {
        float x = ta.at(i);
        y.at(i) = x > 0.0f ? x : std::expm1(x);
      }
      break;
    case Nonlinearity::relu:
      for (size_t i = 0; i < y.size(); ++i) y.at(i) = std::max(0.0f, ta.at(i));
      break;
    case Nonlinearity::tanh_:
      for (size_t i = 0; i < y.size(); ++i) y.at(i) = std::tanh(ta.at(i));
      break;
  }
  return push(std::move(y), {a}, [f](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& x = t.value(in[0]);
    const Tensor& y = t.value(out);
    Tensor& da = t.grad_slot(in[0]);
    for (size_t i = 0; i < g.size(); ++i) {
      float d;
      switch (f) {
        case Nonlinearity::elu:
          d = x.at(i) > 0.0f ? 1.0f : y.at(i) + 1.0f;
          break;
        case Nonlinearity::relu:
          d = x.at(i) > 0.0f ? 1.0f : 0.0f;
          break;
        default:
          d = 1.0f - y.at(i) * y.at(i);
          break;
      }
      da.at(i) += g.at(i) * d;
    }
  });
}

Value Tape::sigmoid(Value a) {
  const Tensor& ta = vals_[a.id];
  Tensor y(ta.shape());
  for (size_t i = 0; i < y.size(); ++i) {
    float x = ta.at(i);
    y.at(i) = x >= 0.0f ? 1.0f / (1.0f + std::exp(-x))
                        : std::exp(x) / (1.0f + std::exp(x));
  }
  return push(std::move(y), {a}, [](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& y = t.value(out);
    Tensor& da = t.grad_slot(in[0]);
    for (size_t i = 0; i < g.size(); ++i) da.at(i) += g.at(i) * y.at(i) * (1.0f - y.at(i));
  });
}

Value Tape::clamp(Value a, float lo, float hi) {
  const Tensor& ta = vals_[a.id];
  Tensor y(ta.shape());
  for (size_t i = 0; i < y.size(); ++i) y.at(i) = std::min(hi, std::max(lo, ta.at(i)));
  return push(std::move(y), {a}, [lo, hi](Tape& t, Value out, std::span<const Value> in) {
    const Tensor& g = t.grad(out);
    const Tensor& x = t.value(in[0]);
    Tensor& da = t.grad_slot(in[0]);
    for (size_t i = 0; i < g.size(); ++i)
      if (x.at(i) > lo && x.at(i) < hi) da.at(i) += g.at(i);
  });
}

Value Tape::bce(Value p, float label) {
  const Tensor& tp = vals_[p.id];
  if (tp.size() != 1) throw ShapeMismatchError("bce expects a scalar probability");
  double pv = tp.at(0);
  double loss = -(label * std::log(pv) + (1.0 - label) * std::log(1.0 - pv));
  Tensor y(Shape::scalar());
  y.at(0) = static_cast<float>(loss);
  return push(std::move(y), {p}, [label](Tape& t, Value out, std::span<const Value> in) {
    double g = t.grad(out).at(0);
    double pv = t.value(in[0]).at(0);
    double d = (-label / pv + (1.0 - label) / (1.0 - pv)) * g;
    t.grad_slot(in[0]).at(0) += static_cast<float>(d);
  });
}

Value Tape::make_node(Tensor out, std::vector<Value> inputs, BackwardFn backward) {
  return push(std::move(out), std::move(inputs), std::move(backward));
}

void Tape::backward(Value loss, float seed) {
  if (vals_[loss.id].size() != 1) throw ShapeMismatchError("backward from a non-scalar");
  if (vgrads_.size() < vals_.size()) vgrads_.resize(vals_.size());
  grad_slot(loss).at(0) += seed;
  for (size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.back) continue;
    if (n.out.id >= vgrads_.size() || vgrads_[n.out.id].empty()) continue;
    n.back(*this, n.out, n.ins);
  }
}

void Adam::step(ParameterStore& store, GradBuffer& grads) {
  if (m_.size() != store.size()) {
    m_.resize(store.size());
    v_.resize(store.size());
    for (size_t i = 0; i < store.size(); ++i) {
      m_[i] = Tensor(store.value(static_cast<uint32_t>(i)).shape());
      v_[i] = Tensor(store.value(static_cast<uint32_t>(i)).shape());
    }
  }
  ++t_;
  double bc1 = 1.0 - std::pow(static_cast<double>(b1_), static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(static_cast<double>(b2_), static_cast<double>(t_));
  double step_size = static_cast<double>(lr_) * std::sqrt(bc2) / bc1;
  for (size_t id = 0; id < store.size(); ++id) {
    Tensor& th = store.value(static_cast<uint32_t>(id));
    const bool has = grads.touched(static_cast<uint32_t>(id));
    const Tensor* g = has ? &grads.grad(static_cast<uint32_t>(id)) : nullptr;
    Tensor& m = m_[id];
    Tensor& v = v_[id];
    for (size_t i = 0; i < th.size(); ++i) {
      double gv = g ? g->at(i) : 0.0;
      double mv = b1_ * m.at(i) + (1.0 - b1_) * gv;
      double vv = b2_ * v.at(i) + (1.0 - b2_) * gv * gv;
      m.at(i) = static_cast<float>(mv);
      v.at(i) = static_cast<float>(vv);
      th.at(i) = static_cast<float>(th.at(i) - step_size * mv / (std::sqrt(vv) + eps_));
    }
  }
}

}  // namespace hinge
