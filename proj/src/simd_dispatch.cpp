#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "homstokes/simd.hpp"

namespace homstokes::simd {

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::avx512:
      return "avx512";
  }
  return "scalar";
}

Isa best_available() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f")) return Isa::avx512;
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
  return Isa::scalar;
}

namespace {

Isa clamp_isa(Isa want) {
  Isa best = best_available();
  return static_cast<int>(want) <= static_cast<int>(best) ? want : best;
}

Isa initial_isa() {
  Isa isa = best_available();
  if (const char* env = std::getenv("HOMSTOKES_SIMD")) {
    std::string v(env);
    if (v == "scalar") isa = Isa::scalar;
    if (v == "avx2") isa = clamp_isa(Isa::avx2);
    if (v == "avx512") isa = clamp_isa(Isa::avx512);
  }
  return isa;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active() { return current().load(std::memory_order_relaxed); }

void set_active(Isa isa) { current().store(clamp_isa(isa), std::memory_order_relaxed); }

double weighted_sum_sq(const double* w, const double* a, std::size_t n) {
  switch (active()) {
    case Isa::avx512:
      return avx512::weighted_sum_sq(w, a, n);
    case Isa::avx2:
      return avx2::weighted_sum_sq(w, a, n);
    default:
      return scalar::weighted_sum_sq(w, a, n);
  }
}

double weighted_sum_pow(const double* w, const double* const* comps, int ncomp, std::size_t n, double p) {
  bool even = (p == 2.0 || p == 4.0);
  if (even && active() == Isa::avx512) return avx512::weighted_sum_pow_even(w, comps, ncomp, n, static_cast<int>(p));
  if (even && active() == Isa::avx2) return avx2::weighted_sum_pow_even(w, comps, ncomp, n, static_cast<int>(p));
  return scalar::weighted_sum_pow(w, comps, ncomp, n, p);
}

void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out) {
  switch (active()) {
    case Isa::avx512:
      avx512::stencil_row(n, nchan, nkind, in, wts, ntap, out);
      return;
    case Isa::avx2:
      avx2::stencil_row(n, nchan, nkind, in, wts, ntap, out);
      return;
    default:
      scalar::stencil_row(n, nchan, nkind, in, wts, ntap, out);
  }
}

namespace scalar {

double weighted_sum_sq(const double* w, const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * a[i];
  return s;
}

double weighted_sum_pow(const double* w, const double* const* comps, int ncomp, std::size_t n, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m2 = 0.0;
    for (int c = 0; c < ncomp; ++c) m2 += comps[c][i] * comps[c][i];
    if (p == 2.0) {
      s += w[i] * m2;
    } else if (p == 4.0) {
      s += w[i] * m2 * m2;
    } else {
      s += w[i] * std::pow(m2, 0.5 * p);
    }
  }
  return s;
}

void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out) {
  for (int k = 0; k < nkind; ++k) {
    for (int c = 0; c < nchan; ++c) {
      const double* src = in[c];
      double* dst = out[k * nchan + c];
      const double* wk = wts + static_cast<std::size_t>(k) * ntap;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = 0; t < ntap; ++t) acc += wk[t] * src[i + t];
        dst[i] += acc;
      }
    }
  }
}

}  // namespace scalar

}  // namespace homstokes::simd
