#pragma once

#include <cstddef>

/// Hot loops with a scalar reference implementation and AVX2 / AVX-512
/// variants chosen once per process from the CPU features. The environment
/// variable HOMSTOKES_SIMD=scalar|avx2|avx512 caps the selection.
namespace homstokes::simd {

enum class Isa { scalar, avx2, avx512 };

const char* isa_name(Isa isa);
Isa best_available();
Isa active();
/// Test hook: switch the dispatch target (clamped to what the CPU supports).
void set_active(Isa isa);

/// sum_i w[i] * a[i]^2
double weighted_sum_sq(const double* w, const double* a, std::size_t n);

/// sum_i w[i] * |v_i|^p with |v_i| the Euclidean norm over ncomp components,
/// comps[c][i] the component values.
double weighted_sum_pow(const double* w, const double* const* comps, int ncomp, std::size_t n, double p);

/// One row of the lattice convolution:
///   out[k*nchan + c][i] += sum_{t < ntap} wts[k*ntap + t] * in[c][i + t]
/// for i < n, k < nkind (1 or 3), c < nchan (1, 2 or 4).
void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out);

namespace scalar {
double weighted_sum_sq(const double* w, const double* a, std::size_t n);
double weighted_sum_pow(const double* w, const double* const* comps, int ncomp, std::size_t n, double p);
void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out);
}  // namespace scalar

namespace avx2 {
double weighted_sum_sq(const double* w, const double* a, std::size_t n);
/// Handles p = 2 and p = 4; other exponents go to the scalar path.
double weighted_sum_pow_even(const double* w, const double* const* comps, int ncomp, std::size_t n, int p);
void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out);
}  // namespace avx2

namespace avx512 {
double weighted_sum_sq(const double* w, const double* a, std::size_t n);
double weighted_sum_pow_even(const double* w, const double* const* comps, int ncomp, std::size_t n, int p);
void stencil_row(std::size_t n, int nchan, int nkind, const double* const* in, const double* wts, int ntap,
                 double* const* out);
}  // namespace avx512

}  // namespace homstokes::simd
