#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "homstokes/simd.hpp"

using namespace homstokes;

namespace {

std::vector<double> randoms(std::size_t n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool supported(simd::Isa isa) { return static_cast<int>(simd::best_available()) >= static_cast<int>(isa); }

void expect_close(double a, double b) { EXPECT_NEAR(a, b, 1e-13 * std::max(1.0, std::abs(b))); }

struct StencilCase {
  std::size_t n;
  int nchan, nkind, ntap;
};

std::vector<std::vector<double>> run_stencil(const StencilCase& c, unsigned seed,
                                             void (*fn)(std::size_t, int, int, const double* const*, const double*, int,
                                                        double* const*)) {
  std::vector<std::vector<double>> in(c.nchan), out(c.nchan * c.nkind);
  std::vector<const double*> ip;
  std::vector<double*> op;
  for (int ch = 0; ch < c.nchan; ++ch) {
    in[ch] = randoms(c.n + c.ntap, seed + ch);
    ip.push_back(in[ch].data());
  }
  for (auto& o : out) {
    o = randoms(c.n, seed + 100);
    op.push_back(o.data());
  }
  auto w = randoms(c.nkind * c.ntap, seed + 7);
  fn(c.n, c.nchan, c.nkind, ip.data(), w.data(), c.ntap, op.data());
  return out;
}

}  // namespace

TEST(Simd, NamesAndSelection) {
  EXPECT_STREQ(simd::isa_name(simd::Isa::scalar), "scalar");
  simd::Isa before = simd::active();
  simd::set_active(simd::Isa::scalar);
  EXPECT_EQ(simd::active(), simd::Isa::scalar);
  simd::set_active(simd::Isa::avx512);
  EXPECT_EQ(simd::active(), simd::best_available());
  simd::set_active(before);
}

TEST(Simd, WeightedSumSquares) {
  for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 17u, 1000u, 1003u}) {
    auto w = randoms(n, 1, 0.0, 1.0), a = randoms(n, 2);
    double ref = simd::scalar::weighted_sum_sq(w.data(), a.data(), n);
    double naive = 0;
    for (std::size_t i = 0; i < n; ++i) naive += w[i] * a[i] * a[i];
    expect_close(ref, naive);
    if (supported(simd::Isa::avx2)) expect_close(simd::avx2::weighted_sum_sq(w.data(), a.data(), n), ref);
    if (supported(simd::Isa::avx512)) expect_close(simd::avx512::weighted_sum_sq(w.data(), a.data(), n), ref);
  }
}

TEST(Simd, WeightedSumPow) {
  for (int ncomp : {1, 2, 4}) {
    for (std::size_t n : {5u, 16u, 999u}) {
      auto w = randoms(n, 3, 0.0, 1.0);
      std::vector<std::vector<double>> c(ncomp);
      std::vector<const double*> cp;
      for (int k = 0; k < ncomp; ++k) {
        c[k] = randoms(n, 10 + k);
        cp.push_back(c[k].data());
      }
      for (int p : {2, 4}) {
        double ref = simd::scalar::weighted_sum_pow(w.data(), cp.data(), ncomp, n, p);
        double naive = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0;
          for (int k = 0; k < ncomp; ++k) s += c[k][i] * c[k][i];
          naive += w[i] * std::pow(std::sqrt(s), p);
        }
        expect_close(ref, naive);
        if (supported(simd::Isa::avx2)) expect_close(simd::avx2::weighted_sum_pow_even(w.data(), cp.data(), ncomp, n, p), ref);
        if (supported(simd::Isa::avx512))
          expect_close(simd::avx512::weighted_sum_pow_even(w.data(), cp.data(), ncomp, n, p), ref);
      }
      // dispatched entry point with a non-even exponent falls back to the reference
      expect_close(simd::weighted_sum_pow(w.data(), cp.data(), ncomp, n, 3.0),
                   simd::scalar::weighted_sum_pow(w.data(), cp.data(), ncomp, n, 3.0));
    }
  }
}

TEST(Simd, StencilRow) {
  for (StencilCase c : {StencilCase{1, 1, 1, 1}, StencilCase{13, 2, 3, 5}, StencilCase{64, 4, 1, 33},
                        StencilCase{257, 4, 3, 17}, StencilCase{9, 1, 3, 64}}) {
    auto ref = run_stencil(c, 42, simd::scalar::stencil_row);
    // independent naive loop
    auto base = run_stencil(c, 42, [](std::size_t, int, int, const double* const*, const double*, int, double* const*) {});
    std::vector<std::vector<double>> in(c.nchan);
    for (int ch = 0; ch < c.nchan; ++ch) in[ch] = randoms(c.n + c.ntap, 42 + ch);
    auto w = randoms(c.nkind * c.ntap, 49);
    for (int k = 0; k < c.nkind; ++k)
      for (int ch = 0; ch < c.nchan; ++ch)
        for (std::size_t i = 0; i < c.n; ++i) {
          double s = base[k * c.nchan + ch][i];
          for (int t = 0; t < c.ntap; ++t) s += w[k * c.ntap + t] * in[ch][i + t];
          expect_close(ref[k * c.nchan + ch][i], s);
        }
    for (auto [isa, fn] : {std::pair{simd::Isa::avx2, &simd::avx2::stencil_row}, std::pair{simd::Isa::avx512, &simd::avx512::stencil_row}}) {
      if (!supported(isa)) continue;
      auto got = run_stencil(c, 42, fn);
      for (std::size_t r = 0; r < got.size(); ++r)
        for (std::size_t i = 0; i < c.n; ++i) expect_close(got[r][i], ref[r][i]);
    }
  }
}

TEST(Simd, ReportsAvailableTargets) {
  std::printf("best available: %s\n", simd::isa_name(simd::best_available()));
  SUCCEED();
}
