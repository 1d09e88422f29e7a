#pragma once

// Complex lane kernels over split (re[], im[]) arrays. A scalar reference
// table and an AVX2/FMA table; dispatch picks one at runtime.

#include <complex>
#include <cstddef>
#include <string_view>

namespace koppelman::simd {

using cplx = std::complex<double>;

struct Kernels {
  const char* name;
  void (*add)(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
              std::size_t n);
  void (*mul)(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
              std::size_t n);
  // Returns false when some denominator is exactly zero (outputs then undefined).
  bool (*div)(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
              std::size_t n);
  // k >= 0.
  void (*powi)(const double* ar, const double* ai, int k, double* cr, double* ci, std::size_t n);
  void (*broadcast)(cplx v, double* cr, double* ci, std::size_t n);
  // sum_i a_i * b_i * w_i with real weights w.
  cplx (*weighted_dot)(const double* ar, const double* ai, const double* br, const double* bi, const double* w,
                       std::size_t n);
};

const Kernels& scalar_kernels();
// nullptr when the CPU lacks AVX2/FMA.
const Kernels* avx2_kernels();

// KOPPELMAN_SIMD=scalar|avx2 overrides detection.
const Kernels& active();
void force(std::string_view name);

}  // namespace koppelman::simd
