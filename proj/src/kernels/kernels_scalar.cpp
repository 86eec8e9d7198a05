// Scalar reference backend. The SIMD backends must match this bit for bit, so
// every expression here is written as the exact operation sequence the vector
// code performs (separate multiply and add, division instead of reciprocal,
// the shared LANE assignment for reductions). Compiled with -ffp-contract=off
// like everything else, so the compiler cannot fuse the multiply-adds.

#include <cstddef>
#include <cmath>

#include "kernel_table.hpp"

namespace recon::kernels::detail {
namespace {

void s_axpy_real(std::size_t n, double a, const cdouble* x, cdouble* y) {
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  for (std::size_t i = 0; i < 2 * n; ++i) yd[i] = yd[i] + a * xd[i];
}

void s_cmul(std::size_t n, const cdouble* a, cdouble* x) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double xr = x[i].real(), xi = x[i].imag();
    x[i] = {xr * ar - xi * ai, xi * ar + xr * ai};
  }
}

void s_cmul_conj(std::size_t n, const cdouble* a, cdouble* x) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double xr = x[i].real(), xi = x[i].imag();
    x[i] = {xr * ar + xi * ai, xi * ar - xr * ai};
  }
}

void s_cmul_to(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {br * ar - bi * ai, bi * ar + br * ai};
  }
}

void s_sub(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  double* od = reinterpret_cast<double*>(out);
  for (std::size_t i = 0; i < 2 * n; ++i) od[i] = ad[i] - bd[i];
}

void s_mul_real(std::size_t n, const double* w, cdouble* x) {
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = {x[i].real() * w[i], x[i].imag() * w[i]};
  }
}

void s_scale(std::size_t n, double s, cdouble* x) {
  double* xd = reinterpret_cast<double*>(x);
  for (std::size_t i = 0; i < 2 * n; ++i) xd[i] = xd[i] * s;
}

void s_extragradient(std::size_t n, const cdouble* next, const cdouble* prev, cdouble* out) {
  const double* nd = reinterpret_cast<const double*>(next);
  const double* pd = reinterpret_cast<const double*>(prev);
  double* od = reinterpret_cast<double*>(out);
  for (std::size_t i = 0; i < 2 * n; ++i) od[i] = 2.0 * nd[i] - pd[i];
}

void s_prox_data_step(std::size_t n, double sigma, const cdouble* r, cdouble* z) {
  const double* rd = reinterpret_cast<const double*>(r);
  double* zd = reinterpret_cast<double*>(z);
  const double denom = 1.0 + sigma;
  for (std::size_t i = 0; i < 2 * n; ++i) zd[i] = (zd[i] + sigma * rd[i]) / denom;
}

void s_add_sq_mag(std::size_t n, const cdouble* x, double* acc) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = x[i].real(), im = x[i].imag();
    acc[i] = acc[i] + (re * re + im * im);
  }
}

void s_clip_factors(std::size_t n, double radius, const double* nsq, double* f) {
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = nsq[i] > r2 ? radius / std::sqrt(nsq[i]) : 1.0;
  }
}

void s_sqrt_real(std::size_t n, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sqrt(x[i]);
}

double s_sum_sq_mag(std::size_t n, const cdouble* x) {
  const double* d = reinterpret_cast<const double*>(x);
  const std::size_t m = 2 * n;
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < m; ++i) s[i % 4] += d[i] * d[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double s_sum_sq_mag_diff(std::size_t n, const cdouble* a, const cdouble* b) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  const std::size_t m = 2 * n;
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ad[i] - bd[i];
    s[i % 4] += e * e;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double s_sum_sqrt(std::size_t n, const double* x) {
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) s[i % 4] += std::sqrt(x[i]);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double s_sum_mag(std::size_t n, const cdouble* x) {
  double s[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double re = x[i].real(), im = x[i].imag();
    s[LANE[i % 4]] += std::sqrt(re * re + im * im);
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

cdouble s_dotc(std::size_t n, const cdouble* a, const cdouble* b) {
  double sr[4] = {0, 0, 0, 0};
  double si[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    sr[LANE[i % 4]] += ar * br + ai * bi;
    si[LANE[i % 4]] += ar * bi - ai * br;
  }
  return {(sr[0] + sr[1]) + (sr[2] + sr[3]), (si[0] + si[1]) + (si[2] + si[3])};
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      s_axpy_real, s_cmul,         s_cmul_conj,      s_cmul_to,  s_sub,
      s_mul_real,  s_scale,        s_extragradient,  s_prox_data_step,
      s_add_sq_mag, s_clip_factors, s_sqrt_real,
      s_sum_sq_mag, s_sum_sq_mag_diff, s_sum_sqrt, s_sum_mag, s_dotc,
  };
  return t;
}

}  // namespace recon::kernels::detail
