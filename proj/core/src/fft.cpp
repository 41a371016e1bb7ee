#include "hinge/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace hinge::fft {

uint32_t next_pow2(uint32_t n) {
  uint32_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

Plan build_plan(uint32_t n) {
  Plan p;
  p.n = n;
  p.bitrev.resize(n);
  uint32_t bits = 0;
  while ((1u << bits) < n) ++bits;
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t r = 0;
    for (uint32_t b = 0; b < bits; ++b)
      if (i & (1u << b)) r |= 1u << (bits - 1 - b);
    p.bitrev[i] = r;
  }
  for (uint32_t len = 2; len <= n; len <<= 1) {
    uint32_t half = len >> 1;
    for (uint32_t k = 0; k < half; ++k) {
      double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(len);
      p.tw_re.push_back(static_cast<float>(std::cos(ang)));
      p.tw_im.push_back(static_cast<float>(std::sin(ang)));
    }
  }
  return p;
}

}  // namespace

const Plan& Plan::of(uint32_t n) {
  if (n == 0 || (n & (n - 1)) != 0)
    throw ShapeMismatchError("FFT length " + std::to_string(n) + " is not a power of two");
  static std::mutex mu;
  static std::map<uint32_t, Plan> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_plan(n)).first;
  return it->second;
}

void c2c(const Plan& p, float* re, float* im, uint32_t channels, bool inverse) {
  const uint32_t n = p.n;
  const uint32_t c = channels;
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t j = p.bitrev[i];
    if (i < j) {
      for (uint32_t ch = 0; ch < c; ++ch) {
        std::swap(re[i * c + ch], re[j * c + ch]);
        std::swap(im[i * c + ch], im[j * c + ch]);
      }
    }
  }
  const float* twr = p.tw_re.data();
  const float* twi = p.tw_im.data();
  for (uint32_t len = 2; len <= n; len <<= 1) {
    uint32_t half = len >> 1;
    for (uint32_t base = 0; base < n; base += len) {
      for (uint32_t k = 0; k < half; ++k) {
        float wr = twr[k];
        float wi = inverse ? -twi[k] : twi[k];
        float* ar = re + (base + k) * c;
        float* ai = im + (base + k) * c;
        float* br = re + (base + k + half) * c;
        float* bi = im + (base + k + half) * c;
        for (uint32_t ch = 0; ch < c; ++ch) {
          float tr = br[ch] * wr - bi[ch] * wi;
          float ti = br[ch] * wi + bi[ch] * wr;
          br[ch] = ar[ch] - tr;
          bi[ch] = ai[ch] - ti;
          ar[ch] += tr;
          ai[ch] += ti;
        }
      }
    }
    twr += half;
    twi += half;
  }
  if (inverse) {
    float s = 1.0f / static_cast<float>(n);
    for (size_t i = 0; i < static_cast<size_t>(n) * c; ++i) {
      re[i] *= s;
      im[i] *= s;
    }
  }
}

std::pair<Tensor, Tensor> rfft(const Tensor& x) {
  uint32_t n = x.shape().inner();
  const Plan& p = Plan::of(n);
  uint32_t batch = static_cast<uint32_t>(x.size() / n);
  uint32_t bins = n / 2 + 1;
  Shape out = x.shape();
  out.d[out.rank - 1] = bins;
  Tensor re(out), im(out);
  std::vector<float> wr(n), wi(n);
  for (uint32_t b = 0; b < batch; ++b) {
    const float* src = x.data() + static_cast<size_t>(b) * n;
    std::copy(src, src + n, wr.begin());
    std::fill(wi.begin(), wi.end(), 0.0f);
    c2c(p, wr.data(), wi.data(), 1, false);
    for (uint32_t k = 0; k < bins; ++k) {
      re.at(static_cast<size_t>(b) * bins + k) = wr[k];
      im.at(static_cast<size_t>(b) * bins + k) = wi[k];
    }
  }
  return {re, im};
}

Tensor irfft(const Tensor& re, const Tensor& im, uint32_t n) {
  const Plan& p = Plan::of(n);
  uint32_t bins = n / 2 + 1;
  if (re.shape().inner() != bins || !(re.shape() == im.shape()))
    throw ShapeMismatchError("irfft: spectrum shape " + re.shape().str() + "/" +
                             im.shape().str() + " for n=" + std::to_string(n));
  uint32_t batch = static_cast<uint32_t>(re.size() / bins);
  Shape out = re.shape();
  out.d[out.rank - 1] = n;
  Tensor x(out);
  std::vector<float> wr(n), wi(n);
  for (uint32_t b = 0; b < batch; ++b) {
    const float* sr = re.data() + static_cast<size_t>(b) * bins;
    const float* si = im.data() + static_cast<size_t>(b) * bins;
    for (uint32_t k = 0; k < bins; ++k) {
      wr[k] = sr[k];
      wi[k] = si[k];
    }
    for (uint32_t k = bins; k < n; ++k) {  // conjugate symmetry
      wr[k] = sr[n - k];
      wi[k] = -si[n - k];
    }
    c2c(p, wr.data(), wi.data(), 1, true);
    for (uint32_t k = 0; k < n; ++k) x.at(static_cast<size_t>(b) * n + k) = wr[k];
  }
  return x;
}

void conv_row(const Plan& p, const float* s, uint32_t is, const float* t, uint32_t it,
              float* out, uint32_t m, uint32_t e, ConvWorkspace& ws) {
  const uint32_t n = p.n;
  ws.resize(static_cast<size_t>(n) * e);
  std::copy(s, s + static_cast<size_t>(is) * e, ws.sre.begin());
  std::copy(t, t + static_cast<size_t>(it) * e, ws.tre.begin());
  c2c(p, ws.sre.data(), ws.sim.data(), e, false);
  c2c(p, ws.tre.data(), ws.tim.data(), e, false);
  for (size_t i = 0; i < static_cast<size_t>(n) * e; ++i) {
    float ar = ws.sre[i], ai = ws.sim[i];
    float br = ws.tre[i], bi = ws.tim[i];
    ws.sre[i] = ar * br - ai * bi;
    ws.sim[i] = ar * bi + ai * br;
  }
  c2c(p, ws.sre.data(), ws.sim.data(), e, true);
  std::copy(ws.sre.begin(), ws.sre.begin() + static_cast<size_t>(m) * e, out);
}

void corr_row(const Plan& p, const float* dy, uint32_t m, const float* q, uint32_t iq,
              float* dx, uint32_t ix, uint32_t e, ConvWorkspace& ws) {
  const uint32_t n = p.n;
  ws.resize(static_cast<size_t>(n) * e);
  std::copy(dy, dy + static_cast<size_t>(m) * e, ws.sre.begin());
  std::copy(q, q + static_cast<size_t>(iq) * e, ws.tre.begin());
  c2c(p, ws.sre.data(), ws.sim.data(), e, false);
  c2c(p, ws.tre.data(), ws.tim.data(), e, false);
  for (size_t i = 0; i < static_cast<size_t>(n) * e; ++i) {
    float ar = ws.sre[i], ai = ws.sim[i];
    float br = ws.tre[i], bi = ws.tim[i];
    ws.sre[i] = ar * br + ai * bi;  // multiply by conj(q)
    ws.sim[i] = ai * br - ar * bi;
  }
  c2c(p, ws.sre.data(), ws.sim.data(), e, true);
  for (size_t i = 0; i < static_cast<size_t>(ix) * e; ++i) dx[i] += ws.sre[i];
}

}  // namespace hinge::fft
