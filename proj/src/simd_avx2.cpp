// Compiled with -mavx2 -mfma; reached only through the runtime dispatcher.
#include <immintrin.h>

#include "homstokes/simd.hpp"

namespace homstokes::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

template <int NK, int NC>
void stencil_fixed(std::size_t n, const double* const* in, const double* wts, int ntap, double* const* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc[NK * NC];
    for (int a = 0; a < NK * NC; ++a) acc[a] = _mm256_setzero_pd();
    for (int t = 0; t < ntap; ++t) {
      __m256d wv[NK];
      for (int k = 0; k < NK; ++k) wv[k] = _mm256_broadcast_sd(wts + k * ntap + t);
      for (int c = 0; c < NC; ++c) {
        __m256d v = _mm256_loadu_pd(in[c] + i + t);
        for (int k = 0; k < NK; ++k) acc[k * NC + c] = _mm256_fmadd_pd(wv[k], v, acc[k * NC + c]);
      }
    }
    for (int a = 0; a < NK * NC; ++a) {
      double* dst = out[a] + i;
      _mm256_storeu_pd(dst, _mm256_add_pd(_mm256_loadu_pd(dst), acc[a]));
    }
  }
  for (; i < n; ++i) {
    for (int k = 0; k < NK; ++k) {
      for (int c = 0; c < NC; ++c) {
        double s = 0.0;
        for (int t = 0; t < ntap; ++t) s += wts[k * ntap + t] * in[c][i + t];
        out[k * NC + c][i] += s;
      }
    }
  }
}

}  // namespace

double weighted_sum_sq(const double* w, const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d a0 = _mm256_loadu_pd(a + i), a1 = _mm256_loadu_pd(a + i + 4);
    acc0 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), a0), a0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i + 4), a1), a1, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * a[i];
  return s;
}

double weighted_sum_pow_even(const double* w, const double* const* comps, int ncomp, std::size_t n, int p) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d m2 = _mm256_setzero_pd();
    for (int c = 0; c < ncomp; ++c) {
      __m256d v = _mm256_loadu_pd(comps[c] + i);
      m2 = _mm256_fmadd_pd(v, v, m2);
    }
    if (p == 4) m2 = _mm256_mul_pd(m2, m2);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), m2, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double m2 = 0.0;
    for (int c = 0; c < ncomp; ++c) m2 += comps[c][i] * comps[c][i];
    s += w[i] * (p == 4 ? m2 * m2 : m2);
  }
  return s;
}

void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out) {
  if (nkind == 3) {
    if (nchan == 4) return stencil_fixed<3, 4>(n, in, wts, ntap, out);
    if (nchan == 2) return stencil_fixed<3, 2>(n, in, wts, ntap, out);
    return stencil_fixed<3, 1>(n, in, wts, ntap, out);
  }
  if (nchan == 4) return stencil_fixed<1, 4>(n, in, wts, ntap, out);
  if (nchan == 2) return stencil_fixed<1, 2>(n, in, wts, ntap, out);
  return stencil_fixed<1, 1>(n, in, wts, ntap, out);
}

}  // namespace homstokes::simd::avx2
