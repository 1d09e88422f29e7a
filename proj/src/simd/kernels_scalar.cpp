#include "koppelman/simd.hpp"

namespace koppelman::simd {
namespace {

void add_s(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cr[i] = ar[i] + br[i];
    ci[i] = ai[i] + bi[i];
  }
}

void mul_s(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double re = ar[i] * br[i] - ai[i] * bi[i];
    double im = ar[i] * bi[i] + ai[i] * br[i];
    cr[i] = re;
    ci[i] = im;
  }
}

bool div_s(const double* ar, const double* ai, const double* br, const double* bi, double* cr, double* ci,
           std::size_t n) {
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    double den = br[i] * br[i] + bi[i] * bi[i];
    if (den == 0.0) ok = false;
    double re = (ar[i] * br[i] + ai[i] * bi[i]) / den;
    double im = (ai[i] * br[i] - ar[i] * bi[i]) / den;
    cr[i] = re;
    ci[i] = im;
  }
  return ok;
}

void powi_s(const double* ar, const double* ai, int k, double* cr, double* ci, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
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

void broadcast_s(cplx v, double* cr, double* ci, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cr[i] = v.real();
    ci[i] = v.imag();
  }
}

cplx weighted_dot_s(const double* ar, const double* ai, const double* br, const double* bi, const double* w,
                    std::size_t n) {
  double sr = 0.0, si = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sr += (ar[i] * br[i] - ai[i] * bi[i]) * w[i];
    si += (ar[i] * bi[i] + ai[i] * br[i]) * w[i];
  }
  return {sr, si};
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{"scalar", add_s, mul_s, div_s, powi_s, broadcast_s, weighted_dot_s};
  return k;
}

}  // namespace koppelman::simd
