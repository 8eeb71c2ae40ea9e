// Compiled with -mavx512f -mavx512dq -mfma; reached only through the runtime dispatcher.
#include <immintrin.h>

#include "homstokes/simd.hpp"

namespace homstokes::simd::avx512 {

namespace {

inline double hsum(__m512d v) { return _mm512_reduce_add_pd(v); }

template <int NK, int NC>
void stencil_fixed(std::size_t n, const double* const* in, const double* wts, int ntap, double* const* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m512d acc[NK * NC];
    for (int a = 0; a < NK * NC; ++a) acc[a] = _mm512_setzero_pd();
    for (int t = 0; t < ntap; ++t) {
      __m512d wv[NK];
      for (int k = 0; k < NK; ++k) wv[k] = _mm512_set1_pd(wts[k * ntap + t]);
      for (int c = 0; c < NC; ++c) {
        __m512d v = _mm512_loadu_pd(in[c] + i + t);
        for (int k = 0; k < NK; ++k) acc[k * NC + c] = _mm512_fmadd_pd(wv[k], v, acc[k * NC + c]);
      }
    }
    for (int a = 0; a < NK * NC; ++a) {
      double* dst = out[a] + i;
      _mm512_storeu_pd(dst, _mm512_add_pd(_mm512_loadu_pd(dst), acc[a]));
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
  __m512d acc0 = _mm512_setzero_pd(), acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    __m512d a0 = _mm512_loadu_pd(a + i), a1 = _mm512_loadu_pd(a + i + 8);
    acc0 = _mm512_fmadd_pd(_mm512_mul_pd(_mm512_loadu_pd(w + i), a0), a0, acc0);
    acc1 = _mm512_fmadd_pd(_mm512_mul_pd(_mm512_loadu_pd(w + i + 8), a1), a1, acc1);
  }
  double s = hsum(_mm512_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * a[i];
  return s;
}

double weighted_sum_pow_even(const double* w, const double* const* comps, int ncomp, std::size_t n, int p) {
  __m512d acc = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m512d m2 = _mm512_setzero_pd();
    for (int c = 0; c < ncomp; ++c) {
      __m512d v = _mm512_loadu_pd(comps[c] + i);
      m2 = _mm512_fmadd_pd(v, v, m2);
    }
    if (p == 4) m2 = _mm512_mul_pd(m2, m2);
    acc = _mm512_fmadd_pd(_mm512_loadu_pd(w + i), m2, acc);
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

}  // namespace homstokes::simd::avx512
