#include "hinge/interaction.hpp"

#include "hinge/fft.hpp"

namespace hinge {

std::vector<std::pair<size_t, size_t>> enumerate_combinations(size_t n_source, size_t n_target,
                                                              bool cross) {
  std::vector<std::pair<size_t, size_t>> out;
  if (cross) {
    for (size_t s = 0; s < n_source; ++s)
      for (size_t t = 0; t < n_target; ++t) out.emplace_back(s, t);
    return out;
  }
  if (n_source != n_target)
    throw ShapeMismatchError("aligned combinations need equal path counts, got " +
                             std::to_string(n_source) + " and " + std::to_string(n_target));
  for (size_t s = 0; s < n_source; ++s) out.emplace_back(s, s);
  return out;
}

Value build_embedding_matrix(Tape& t, const PathBatch& batch,
                             const std::vector<uint32_t>& tables_by_position) {
  if (tables_by_position.size() != batch.nodes)
    throw ShapeMismatchError("one table per path position expected");
  const uint32_t L = batch.rows;
  const uint32_t I = batch.nodes;
  std::vector<Value> cols;
  std::vector<uint32_t> ids(L);
  cols.reserve(I);
  for (uint32_t p = 0; p < I; ++p) {
    for (uint32_t r = 0; r < L; ++r) ids[r] = batch.at(r, p);
    cols.push_back(t.embed(tables_by_position[p], ids, Shape::vec(L)));
  }
  // Interleave the per-position [L,E] blocks into [L,I,E].
  const uint32_t E = t.value(cols[0]).shape().d[1];
  Tensor y(Shape::cube(L, I, E));
  for (uint32_t p = 0; p < I; ++p) {
    const Tensor& c = t.value(cols[p]);
    for (uint32_t r = 0; r < L; ++r)
      std::copy(c.data() + static_cast<size_t>(r) * E, c.data() + static_cast<size_t>(r + 1) * E,
                y.data() + (static_cast<size_t>(r) * I + p) * E);
  }
  return t.make_node(std::move(y), std::move(cols),
                     [L, I, E](Tape& t, Value out, std::span<const Value> in) {
                       const Tensor& g = t.grad(out);
                       for (uint32_t p = 0; p < I; ++p) {
                         Tensor& d = t.grad_slot(in[p]);
                         for (uint32_t r = 0; r < L; ++r) {
                           const float* src = g.data() + (static_cast<size_t>(r) * I + p) * E;
                           float* dst = d.data() + static_cast<size_t>(r) * E;
                           for (uint32_t x = 0; x < E; ++x) dst[x] += src[x];
                         }
                       }
                     });
}

namespace {

// Reference kernel: the direct per-channel sum, one double accumulator per
// output element.
void conv_naive_row(const float* s, uint32_t is, const float* t, uint32_t it, float* out,
                    uint32_t m, uint32_t e) {
  for (uint32_t ch = 0; ch < e; ++ch) {
    for (uint32_t om = 0; om < m; ++om) {
      uint32_t alo = om >= it - 1 ? om - (it - 1) : 0;
      uint32_t ahi = std::min(is - 1, om);
      double acc = 0.0;
      for (uint32_t a = alo; a <= ahi; ++a)
        acc += static_cast<double>(s[a * e + ch]) * t[(om - a) * e + ch];
      out[om * e + ch] = static_cast<float>(acc);
    }
  }
}

// Transposed loops of conv_naive_row: dx[i] += sum_m dy[m] * q[m-i].
void corr_naive_row(const float* dy, uint32_t m, const float* q, uint32_t iq, float* dx,
                    uint32_t ix, uint32_t e) {
  for (uint32_t ch = 0; ch < e; ++ch) {
    for (uint32_t i = 0; i < ix; ++i) {
      uint32_t mhi = std::min(m - 1, i + iq - 1);
      double acc = 0.0;
      for (uint32_t om = i; om <= mhi; ++om)
        acc += static_cast<double>(dy[om * e + ch]) * q[(om - i) * e + ch];
      dx[i * e + ch] += static_cast<float>(acc);
    }
  }
}

}  // namespace

Value interact(Tape& t, Value src, Value tgt, ConvRoute route, bool all_pairs) {
  const Tensor& s = t.value(src);
  const Tensor& tt = t.value(tgt);
  if (s.shape().rank != 3 || tt.shape().rank != 3)
    throw ShapeMismatchError("interact expects [L,I,E] inputs");
  const uint32_t ls = s.shape().d[0], is = s.shape().d[1], e = s.shape().d[2];
  const uint32_t lt = tt.shape().d[0], it = tt.shape().d[1];
  if (tt.shape().d[2] != e)
    throw ShapeMismatchError("interact channel mismatch " + s.shape().str() + " vs " +
                             tt.shape().str());
  if (!all_pairs && ls != lt)
    throw ShapeMismatchError("aligned interact needs equal row counts, got " +
                             std::to_string(ls) + " and " + std::to_string(lt));
  const uint32_t m = is + it - 1;
  const uint32_t rows = all_pairs ? ls * lt : ls;
  const uint32_t n = fft::next_pow2(m);

  Tensor y(Shape::cube(rows, m, e));
  const size_t s_row = static_cast<size_t>(is) * e;
  const size_t t_row = static_cast<size_t>(it) * e;
  const size_t y_row = static_cast<size_t>(m) * e;
  if (route == ConvRoute::fft) {
    const fft::Plan& plan = fft::Plan::of(n);
    thread_local fft::ConvWorkspace ws;
    for (uint32_t r = 0; r < rows; ++r) {
      uint32_t rs = all_pairs ? r / lt : r;
      uint32_t rt = all_pairs ? r % lt : r;
      fft::conv_row(plan, s.data() + rs * s_row, is, tt.data() + rt * t_row, it,
                    y.data() + r * y_row, m, e, ws);
    }
  } else {
    for (uint32_t r = 0; r < rows; ++r) {
      uint32_t rs = all_pairs ? r / lt : r;
      uint32_t rt = all_pairs ? r % lt : r;
      conv_naive_row(s.data() + rs * s_row, is, tt.data() + rt * t_row, it, y.data() + r * y_row,
                     m, e);
    }
  }

  return t.make_node(
      std::move(y), {src, tgt},
      [route, all_pairs, ls, lt, is, it, e, m, n, rows, s_row, t_row, y_row](
          Tape& t, Value out, std::span<const Value> in) {
        const Tensor& g = t.grad(out);
        const Tensor& s = t.value(in[0]);
        const Tensor& tt = t.value(in[1]);
        Tensor& ds = t.grad_slot(in[0]);
        Tensor& dt = t.grad_slot(in[1]);
        if (route == ConvRoute::fft) {
          const fft::Plan& plan = fft::Plan::of(n);
          thread_local fft::ConvWorkspace ws;
          for (uint32_t r = 0; r < rows; ++r) {
            uint32_t rs = all_pairs ? r / lt : r;
            uint32_t rt = all_pairs ? r % lt : r;
            fft::corr_row(plan, g.data() + r * y_row, m, tt.data() + rt * t_row, it,
                          ds.data() + rs * s_row, is, e, ws);
            fft::corr_row(plan, g.data() + r * y_row, m, s.data() + rs * s_row, is,
                          dt.data() + rt * t_row, it, e, ws);
          }
        } else {
          for (uint32_t r = 0; r < rows; ++r) {
            uint32_t rs = all_pairs ? r / lt : r;
            uint32_t rt = all_pairs ? r % lt : r;
            corr_naive_row(g.data() + r * y_row, m, tt.data() + rt * t_row, it,
                           ds.data() + rs * s_row, is, e);
            corr_naive_row(g.data() + r * y_row, m, s.data() + rs * s_row, is,
                           dt.data() + rt * t_row, it, e);
          }
        }
        (void)ls;
      });
}

}  // namespace hinge
