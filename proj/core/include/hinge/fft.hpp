#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hinge/tensor.hpp"

namespace hinge::fft {

uint32_t next_pow2(uint32_t n);

// Iterative radix-2 plan for one power-of-two length. Twiddle factors are
// evaluated in double precision and rounded once to float for the kernels.
struct Plan {
  uint32_t n = 0;
  std::vector<uint32_t> bitrev;
  std::vector<float> tw_re, tw_im;  // per-stage tables, concatenated

  static const Plan& of(uint32_t n);  // cached; n must be a power of two
};

// In-place complex FFT batched over `channels` interleaved lanes: element
// (pos, ch) lives at [pos * channels + ch]. The channel axis is the unit-stride
// vectorization axis, which is what makes the convolution kernels fast.
void c2c(const Plan& p, float* re, float* im, uint32_t channels, bool inverse);

// Real transforms over the last axis (length must be a power of two). Output
// keeps n/2+1 bins; the upper half is implied by conjugate symmetry.
std::pair<Tensor, Tensor> rfft(const Tensor& x);
Tensor irfft(const Tensor& re, const Tensor& im, uint32_t n);

// Scratch reused across convolution calls to keep allocation out of hot loops.
struct ConvWorkspace {
  std::vector<float> sre, sim, tre, tim;
  void resize(size_t n) {
    sre.assign(n, 0.0f);
    sim.assign(n, 0.0f);
    tre.assign(n, 0.0f);
    tim.assign(n, 0.0f);
  }
};

// One interaction row: out[m,e] = sum_{a+b=m} s[a,e] * t[b,e], m in [0, M).
// s is [Is,E], t is [It,E], out is [M,E]; plan length must be >= M so the
// circular wrap never touches live samples.
void conv_row(const Plan& p, const float* s, uint32_t is, const float* t, uint32_t it,
              float* out, uint32_t m, uint32_t e, ConvWorkspace& ws);

// Adjoint of conv_row with respect to one input: accumulates the correlation
// dx[i,e] += sum_m dy[m,e] * q[m-i,e] into dx ([Ix,E]).
void corr_row(const Plan& p, const float* dy, uint32_t m, const float* q, uint32_t iq,
              float* dx, uint32_t ix, uint32_t e, ConvWorkspace& ws);

}  // namespace hinge::fft
