#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "hinge/fft.hpp"

using namespace hinge;
using namespace hinge::test;

TEST_SUITE_BEGIN("fft");

namespace {

// Direct O(n^2) DFT in double precision, the reference the radix-2 kernels
// are checked against.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x, bool inverse) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0, 0};
    for (size_t j = 0; j < n; ++j)
      acc += x[j] * std::polar(1.0, sign * 2.0 * M_PI * double(j * k) / double(n));
    out[k] = inverse ? acc / double(n) : acc;
  }
  return out;
}

std::vector<float> naive_conv(const std::vector<float>& s, const std::vector<float>& t) {
  std::vector<float> out(s.size() + t.size() - 1, 0.0f);
  for (size_t a = 0; a < s.size(); ++a)
    for (size_t b = 0; b < t.size(); ++b) out[a + b] += s[a] * t[b];
  return out;
}

}  // namespace

TEST_CASE("next_pow2") {
  CHECK(fft::next_pow2(1) == 1);
  CHECK(fft::next_pow2(2) == 2);
  CHECK(fft::next_pow2(3) == 4);
  CHECK(fft::next_pow2(7) == 8);
  CHECK(fft::next_pow2(8) == 8);
  CHECK(fft::next_pow2(9) == 16);
}

TEST_CASE("c2c matches the direct transform") {
  Rng rng = Rng::keyed({61});
  for (uint32_t n : {2u, 8u, 32u}) {
    const fft::Plan& plan = fft::Plan::of(n);
    std::vector<std::complex<double>> x(n);
    std::vector<float> re(n), im(n);
    for (uint32_t k = 0; k < n; ++k) {
      re[k] = rng.next_symmetric();
      im[k] = rng.next_symmetric();
      x[k] = {re[k], im[k]};
    }
    auto ref = dft(x, false);
    fft::c2c(plan, re.data(), im.data(), 1, false);
    for (uint32_t k = 0; k < n; ++k) {
      CHECK(close(re[k], ref[k].real(), 1e-5, 1e-5));
      CHECK(close(im[k], ref[k].imag(), 1e-5, 1e-5));
    }
    fft::c2c(plan, re.data(), im.data(), 1, true);
    for (uint32_t k = 0; k < n; ++k) {
      CHECK(close(re[k], x[k].real(), 1e-5, 1e-5));
      CHECK(close(im[k], x[k].imag(), 1e-5, 1e-5));
    }
  }
}

TEST_CASE("channel lanes transform independently") {
  Rng rng = Rng::keyed({62});
  const uint32_t n = 16, ch = 3;
  std::vector<float> re(n * ch), im(n * ch);
  for (auto& v : re) v = rng.next_symmetric();
  for (auto& v : im) v = rng.next_symmetric();
  std::vector<float> batched_re = re, batched_im = im;
  fft::c2c(fft::Plan::of(n), batched_re.data(), batched_im.data(), ch, false);
  for (uint32_t c = 0; c < ch; ++c) {
    std::vector<float> lane_re(n), lane_im(n);
    for (uint32_t k = 0; k < n; ++k) {
      lane_re[k] = re[k * ch + c];
      lane_im[k] = im[k * ch + c];
    }
    fft::c2c(fft::Plan::of(n), lane_re.data(), lane_im.data(), 1, false);
    for (uint32_t k = 0; k < n; ++k) {
      CHECK(close(batched_re[k * ch + c], lane_re[k], 1e-6, 1e-6));
      CHECK(close(batched_im[k * ch + c], lane_im[k], 1e-6, 1e-6));
    }
  }
}

TEST_CASE("rfft round-trip and Parseval") {
  Rng rng = Rng::keyed({63});
  Tensor x(Shape::mat(3, 16));
  for (size_t k = 0; k < x.size(); ++k) x.at(k) = rng.next_symmetric();
  auto [re, im] = fft::rfft(x);
  CHECK(re.shape() == Shape::mat(3, 9));  // n/2 + 1 bins
  Tensor back = fft::irfft(re, im, 16);
  for (size_t k = 0; k < x.size(); ++k) CHECK(close(back.at(k), x.at(k), 1e-5, 1e-5));

  // Parseval over each row: sum x^2 = (1/n) sum |X|^2 with the symmetric bins doubled
  for (uint32_t r = 0; r < 3; ++r) {
    double time_e = 0, freq_e = 0;
    for (uint32_t k = 0; k < 16; ++k) time_e += double(x.at(r, k)) * x.at(r, k);
    for (uint32_t k = 0; k < 9; ++k) {
      double mag = double(re.at(r, k)) * re.at(r, k) + double(im.at(r, k)) * im.at(r, k);
      freq_e += (k == 0 || k == 8) ? mag : 2.0 * mag;
    }
    CHECK(close(time_e, freq_e / 16.0, 1e-4, 1e-5));
  }

  CHECK_THROWS_AS(fft::rfft(Tensor(Shape::mat(2, 12))), ShapeMismatchError);
  CHECK_THROWS_AS(fft::Plan::of(12), ShapeMismatchError);
}

TEST_CASE("conv_row frozen example") {
  // (1,2,3) * (4,5,6) = (4, 13, 28, 27, 18)
  std::vector<float> s{1, 2, 3}, t{4, 5, 6}, out(5, -1.0f);
  fft::ConvWorkspace ws;
  const fft::Plan& plan = fft::Plan::of(fft::next_pow2(5));
  fft::conv_row(plan, s.data(), 3, t.data(), 3, out.data(), 5, 1, ws);
  const float expect[5] = {4, 13, 28, 27, 18};
  for (int k = 0; k < 5; ++k) CHECK(out[k] == doctest::Approx(expect[k]).epsilon(1e-5));
}

TEST_CASE("conv_row against the direct sum, all lengths and channels") {
  Rng rng = Rng::keyed({64});
  fft::ConvWorkspace ws;
  for (uint32_t is : {1u, 2u, 3u, 5u, 8u}) {
    for (uint32_t it : {1u, 2u, 4u, 7u}) {
      const uint32_t m = is + it - 1;
      const fft::Plan& plan = fft::Plan::of(fft::next_pow2(m));
      for (uint32_t e : {1u, 3u}) {
        std::vector<float> s(is * e), t(it * e), out(m * e);
        for (auto& v : s) v = rng.next_symmetric();
        for (auto& v : t) v = rng.next_symmetric();
        fft::conv_row(plan, s.data(), is, t.data(), it, out.data(), m, e, ws);
        for (uint32_t c = 0; c < e; ++c) {
          std::vector<float> sc(is), tc(it);
          for (uint32_t k = 0; k < is; ++k) sc[k] = s[k * e + c];
          for (uint32_t k = 0; k < it; ++k) tc[k] = t[k * e + c];
          auto ref = naive_conv(sc, tc);
          for (uint32_t k = 0; k < m; ++k)
            CHECK(close(out[k * e + c], ref[k], 1e-5, 1e-5));
        }
      }
    }
  }
}

TEST_CASE("corr_row is the adjoint of conv_row") {
  // <conv(s,t), y> must equal <s, corr(y, t)> and <t, corr(y, s)>
  Rng rng = Rng::keyed({65});
  fft::ConvWorkspace ws;
  const uint32_t is = 5, it = 3, m = is + it - 1, e = 4;
  const fft::Plan& plan = fft::Plan::of(fft::next_pow2(m));
  std::vector<float> s(is * e), t(it * e), y(m * e);
  for (auto& v : s) v = rng.next_symmetric();
  for (auto& v : t) v = rng.next_symmetric();
  for (auto& v : y) v = rng.next_symmetric();

  std::vector<float> conv(m * e);
  fft::conv_row(plan, s.data(), is, t.data(), it, conv.data(), m, e, ws);
  double lhs = 0;
  for (uint32_t k = 0; k < m * e; ++k) lhs += double(conv[k]) * y[k];

  std::vector<float> ds(is * e, 0.0f), dt(it * e, 0.0f);
  fft::corr_row(plan, y.data(), m, t.data(), it, ds.data(), is, e, ws);
  fft::corr_row(plan, y.data(), m, s.data(), is, dt.data(), it, e, ws);
  double via_s = 0, via_t = 0;
  for (uint32_t k = 0; k < is * e; ++k) via_s += double(ds[k]) * s[k];
  for (uint32_t k = 0; k < it * e; ++k) via_t += double(dt[k]) * t[k];
  CHECK(close(lhs, via_s, 1e-4, 1e-5));
  CHECK(close(lhs, via_t, 1e-4, 1e-5));

  // and corr accumulates rather than overwrites
  std::vector<float> ds2 = ds;
  fft::corr_row(plan, y.data(), m, t.data(), it, ds2.data(), is, e, ws);
  for (uint32_t k = 0; k < is * e; ++k) CHECK(close(ds2[k], 2.0 * ds[k], 1e-5, 1e-6));
}

TEST_SUITE_END();
