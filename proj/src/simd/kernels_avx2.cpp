// Built with -mavx2 -mfma. Only reached through avx2_kernels() after a CPU check.
#include <immintrin.h>

#include "koppelman/simd.hpp"

namespace koppelman::simd {
namespace {

void add_v(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
           std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(cr + i, _mm256_add_pd(_mm256_loadu_pd(ar + i), _mm256_loadu_pd(br + i)));
    _mm256_storeu_pd(ci + i, _mm256_add_pd(_mm256_loadu_pd(ai + i), _mm256_loadu_pd(bi + i)));
  }
  for (; i < n; ++i) {
    cr[i] = ar[i] + br[i];
    ci[i] = ai[i] + bi[i];
  }
}

inline void cmul4(__m256d xr, __m256d xi, __m256d yr, __m256d yi, __m256d& zr, __m256d& zi) {
  zr = _mm256_fmsub_pd(xr, yr, _mm256_mul_pd(xi, yi));
  zi = _mm256_fmadd_pd(xr, yi, _mm256_mul_pd(xi, yr));
}

void mul_v(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
           std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d zr, zi;
    cmul4(_mm256_loadu_pd(ar + i), _mm256_loadu_pd(ai + i), _mm256_loadu_pd(br + i), _mm256_loadu_pd(bi + i), zr,
          zi);
    _mm256_storeu_pd(cr + i, zr);
    _mm256_storeu_pd(ci + i, zi);
  }
  for (; i < n; ++i) {
    double re = ar[i] * br[i] - ai[i] * bi[i];
    double im = ar[i] * bi[i] + ai[i] * br[i];
    cr[i] = re;
    ci[i] = im;
  }
}

bool div_v(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
           std::size_t n) {
  std::size_t i = 0;
  const __m256d zero = _mm256_setzero_pd();
  int bad = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xr = _mm256_loadu_pd(ar + i), xi = _mm256_loadu_pd(ai + i);
    __m256d yr = _mm256_loadu_pd(br + i), yi = _mm256_loadu_pd(bi + i);
    __m256d den = _mm256_fmadd_pd(yr, yr, _mm256_mul_pd(yi, yi));
    bad |= _mm256_movemask_pd(_mm256_cmp_pd(den, zero, _CMP_EQ_OQ));
    __m256d nr = _mm256_fmadd_pd(xr, yr, _mm256_mul_pd(xi, yi));
    __m256d ni = _mm256_fmsub_pd(xi, yr, _mm256_mul_pd(xr, yi));
    _mm256_storeu_pd(cr + i, _mm256_div_pd(nr, den));
    _mm256_storeu_pd(ci + i, _mm256_div_pd(ni, den));
  }
  bool ok = bad == 0;
  for (; i < n; ++i) {
    double den = br[i] * br[i] + bi[i] * bi[i];
    if (den == 0.0) ok = false;
    double re = (ar[i] * br[i] + ai[i] * bi[i]) / den;
    double im = (ai[i] * br[i] - ar[i] * bi[i]) / den;
    cr[i] = re;
    ci[i] = im;
  }
  return ok;
}

void powi_v(const double* ar, const double* ai, int k, double* cr, double* ci, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xr = _mm256_loadu_pd(ar + i), xi = _mm256_loadu_pd(ai + i);
    __m256d rr = _mm256_set1_pd(1.0), ri = _mm256_setzero_pd();
    int e = k;
    while (e > 0) {
      if (e & 1) cmul4(rr, ri, xr, xi, rr, ri);
      cmul4(xr, xi, xr, xi, xr, xi);
      e >>= 1;
    }
    _mm256_storeu_pd(cr + i, rr);
    _mm256_storeu_pd(ci + i, ri);
  }
  for (; i < n; ++i) {
    double xr = ar[i], xi = ai[i];
    double rr = 1.0, ri = 0.0;
    int e = k;
    while (e > 0) {
      if (e & 1) {
        double t = rr * xr - ri * xi;
        ri = rr * xi + ri * xr;
        rr = t;
      }
      double t = xr * xr - xi * xi;
      xi = 2.0 * xr * xi;
      xr = t;
      e >>= 1;
    }
    cr[i] = rr;
    ci[i] = ri;
  }
}

void broadcast_v(cplx v, double* cr, double* ci, std::size_t n) {
  std::size_t i = 0;
  __m256d r = _mm256_set1_pd(v.real()), m = _mm256_set1_pd(v.imag());
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(cr + i, r);
    _mm256_storeu_pd(ci + i, m);
  }
  for (; i < n; ++i) {
    cr[i] = v.real();
    ci[i] = v.imag();
  }
}

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

cplx weighted_dot_v(const double* ar, const double* ai, const double* br, const double* bi, const double* w,
                    std::size_t n) {
  __m256d sr = _mm256_setzero_pd(), si = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d zr, zi;
    cmul4(_mm256_loadu_pd(ar + i), _mm256_loadu_pd(ai + i), _mm256_loadu_pd(br + i), _mm256_loadu_pd(bi + i), zr,
          zi);
    __m256d ww = _mm256_loadu_pd(w + i);
    sr = _mm256_fmadd_pd(zr, ww, sr);
    si = _mm256_fmadd_pd(zi, ww, si);
  }
  double rr = hsum(sr), ri = hsum(si);
  for (; i < n; ++i) {
    rr += (ar[i] * br[i] - ai[i] * bi[i]) * w[i];
    ri += (ar[i] * bi[i] + ai[i] * br[i]) * w[i];
  }
  return {rr, ri};
}

}  // namespace

const Kernels& avx2_table() {
  static const Kernels k{"avx2", add_v, mul_v, div_v, powi_v, broadcast_v, weighted_dot_v};
  return k;
}

}  // namespace koppelman::simd
