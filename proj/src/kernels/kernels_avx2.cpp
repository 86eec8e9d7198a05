// AVX2 backend. This translation unit is the only one built with -mavx2, and
// only the dispatcher calls into it after a runtime CPU check. No FMA: the
// scalar reference rounds multiply and add separately, so this code does too.

#include "kernel_table.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace recon::kernels::detail {
namespace {

inline __m256d loadu(const double* p) { return _mm256_loadu_pd(p); }
inline void storeu(double* p, __m256d v) { _mm256_storeu_pd(p, v); }

// (x0,x1,x2,x3) -> (x0,x0,x2,x2) and (x1,x1,x3,x3): real/imag broadcast per pair
inline __m256d dup_even(__m256d v) { return _mm256_movedup_pd(v); }
inline __m256d dup_odd(__m256d v) { return _mm256_permute_pd(v, 0xF); }
inline __m256d swap_pairs(__m256d v) { return _mm256_permute_pd(v, 0x5); }

inline __m256d negate(__m256d v) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  return _mm256_xor_pd(v, sign);
}

inline double combine(__m256d acc) {
  double s[4];
  storeu(s, acc);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

void v_axpy_real(std::size_t n, double a, const cdouble* x, cdouble* y) {
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  const __m256d av = _mm256_set1_pd(a);
  for (std::size_t i = 0; i < m4; i += 4) {
    storeu(yd + i, _mm256_add_pd(loadu(yd + i), _mm256_mul_pd(av, loadu(xd + i))));
  }
  for (std::size_t i = m4; i < m; ++i) yd[i] = yd[i] + a * xd[i];
}

// x *= a, both complex: t1 = x * re(a), t2 = swap(x) * im(a), addsub(t1, t2)
void v_cmul(std::size_t n, const cdouble* a, cdouble* x) {
  const double* ad = reinterpret_cast<const double*>(a);
  double* xd = reinterpret_cast<double*>(x);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  for (std::size_t i = 0; i < m4; i += 4) {
    const __m256d av = loadu(ad + i), xv = loadu(xd + i);
    const __m256d t1 = _mm256_mul_pd(xv, dup_even(av));
    const __m256d t2 = _mm256_mul_pd(swap_pairs(xv), dup_odd(av));
    storeu(xd + i, _mm256_addsub_pd(t1, t2));
  }
  for (std::size_t i = m4; i < m; i += 2) {
    const double ar = ad[i], ai = ad[i + 1], xr = xd[i], xi = xd[i + 1];
    xd[i] = xr * ar - xi * ai;
    xd[i + 1] = xi * ar + xr * ai;
  }
}

void v_cmul_conj(std::size_t n, const cdouble* a, cdouble* x) {
  const double* ad = reinterpret_cast<const double*>(a);
  double* xd = reinterpret_cast<double*>(x);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  for (std::size_t i = 0; i < m4; i += 4) {
    const __m256d av = loadu(ad + i), xv = loadu(xd + i);
    const __m256d t1 = _mm256_mul_pd(xv, dup_even(av));
    const __m256d t2 = _mm256_mul_pd(swap_pairs(xv), dup_odd(av));
    storeu(xd + i, _mm256_addsub_pd(t1, negate(t2)));
  }
  for (std::size_t i = m4; i < m; i += 2) {
    const double ar = ad[i], ai = ad[i + 1], xr = xd[i], xi = xd[i + 1];
    xd[i] = xr * ar + xi * ai;
    xd[i + 1] = xi * ar - xr * ai;
  }
}

void v_cmul_to(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  double* od = reinterpret_cast<double*>(out);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  for (std::size_t i = 0; i < m4; i += 4) {
    const __m256d av = loadu(ad + i), bv = loadu(bd + i);
    const __m256d t1 = _mm256_mul_pd(bv, dup_even(av));
    const __m256d t2 = _mm256_mul_pd(swap_pairs(bv), dup_odd(av));
    storeu(od + i, _mm256_addsub_pd(t1, t2));
  }
  for (std::size_t i = m4; i < m; i += 2) {
    const double ar = ad[i], ai = ad[i + 1], br = bd[i], bi = bd[i + 1];
    od[i] = br * ar - bi * ai;
    od[i + 1] = bi * ar + br * ai;
  }
}

void v_sub(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  double* od = reinterpret_cast<double*>(out);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  for (std::size_t i = 0; i < m4; i += 4) {
    storeu(od + i, _mm256_sub_pd(loadu(ad + i), loadu(bd + i)));
  }
  for (std::size_t i = m4; i < m; ++i) od[i] = ad[i] - bd[i];
}

void v_mul_real(std::size_t n, const double* w, cdouble* x) {
  double* xd = reinterpret_cast<double*>(x);
  const std::size_t n2 = n & ~std::size_t(1);
  for (std::size_t i = 0; i < n2; i += 2) {
    // (w[i], w[i+1]) -> (w[i], w[i], w[i+1], w[i+1])
    const __m256d wp = _mm256_castpd128_pd256(_mm_loadu_pd(w + i));
    const __m256d wd = _mm256_permute4x64_pd(wp, 0x50);
    storeu(xd + 2 * i, _mm256_mul_pd(loadu(xd + 2 * i), wd));
  }
  for (std::size_t i = n2; i < n; ++i) {
    xd[2 * i] = xd[2 * i] * w[i];
    xd[2 * i + 1] = xd[2 * i + 1] * w[i];
  }
}

void v_scale(std::size_t n, double s, cdouble* x) {
  double* xd = reinterpret_cast<double*>(x);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  const __m256d sv = _mm256_set1_pd(s);
  for (std::size_t i = 0; i < m4; i += 4) storeu(xd + i, _mm256_mul_pd(loadu(xd + i), sv));
  for (std::size_t i = m4; i < m; ++i) xd[i] = xd[i] * s;
}

void v_extragradient(std::size_t n, const cdouble* next, const cdouble* prev, cdouble* out) {
  const double* nd = reinterpret_cast<const double*>(next);
  const double* pd = reinterpret_cast<const double*>(prev);
  double* od = reinterpret_cast<double*>(out);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  const __m256d two = _mm256_set1_pd(2.0);
  for (std::size_t i = 0; i < m4; i += 4) {
    storeu(od + i, _mm256_sub_pd(_mm256_mul_pd(two, loadu(nd + i)), loadu(pd + i)));
  }
  for (std::size_t i = m4; i < m; ++i) od[i] = 2.0 * nd[i] - pd[i];
}

void v_prox_data_step(std::size_t n, double sigma, const cdouble* r, cdouble* z) {
  const double* rd = reinterpret_cast<const double*>(r);
  double* zd = reinterpret_cast<double*>(z);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  const double denom = 1.0 + sigma;
  const __m256d sv = _mm256_set1_pd(sigma), dv = _mm256_set1_pd(denom);
  for (std::size_t i = 0; i < m4; i += 4) {
    const __m256d t = _mm256_add_pd(loadu(zd + i), _mm256_mul_pd(sv, loadu(rd + i)));
    storeu(zd + i, _mm256_div_pd(t, dv));
  }
  for (std::size_t i = m4; i < m; ++i) zd[i] = (zd[i] + sigma * rd[i]) / denom;
}

void v_add_sq_mag(std::size_t n, const cdouble* x, double* acc) {
  const double* xd = reinterpret_cast<const double*>(x);
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d lo = loadu(xd + 2 * i), hi = loadu(xd + 2 * i + 4);
    // hadd lane order is (c0, c2, c1, c3); permute back to sequential
    const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(lo, lo), _mm256_mul_pd(hi, hi));
    const __m256d sq = _mm256_permute4x64_pd(h, 0xD8);
    storeu(acc + i, _mm256_add_pd(loadu(acc + i), sq));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double re = xd[2 * i], im = xd[2 * i + 1];
    acc[i] = acc[i] + (re * re + im * im);
  }
}

void v_clip_factors(std::size_t n, double radius, const double* nsq, double* f) {
  const double r2 = radius * radius;
  const std::size_t n4 = n & ~std::size_t(3);
  const __m256d rv = _mm256_set1_pd(radius), r2v = _mm256_set1_pd(r2);
  const __m256d one = _mm256_set1_pd(1.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d v = loadu(nsq + i);
    const __m256d mask = _mm256_cmp_pd(v, r2v, _CMP_GT_OQ);
    const __m256d q = _mm256_div_pd(rv, _mm256_sqrt_pd(v));
    storeu(f + i, _mm256_blendv_pd(one, q, mask));
  }
  for (std::size_t i = n4; i < n; ++i) f[i] = nsq[i] > r2 ? radius / std::sqrt(nsq[i]) : 1.0;
}

void v_sqrt_real(std::size_t n, double* x) {
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t i = 0; i < n4; i += 4) storeu(x + i, _mm256_sqrt_pd(loadu(x + i)));
  for (std::size_t i = n4; i < n; ++i) x[i] = std::sqrt(x[i]);
}

double v_sum_sq_mag(std::size_t n, const cdouble* x) {
  const double* d = reinterpret_cast<const double*>(x);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < m4; i += 4) {
    const __m256d v = loadu(d + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s[4];
  storeu(s, acc);
  for (std::size_t i = m4; i < m; ++i) s[i % 4] += d[i] * d[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double v_sum_sq_mag_diff(std::size_t n, const cdouble* a, const cdouble* b) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < m4; i += 4) {
    const __m256d e = _mm256_sub_pd(loadu(ad + i), loadu(bd + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(e, e));
  }
  double s[4];
  storeu(s, acc);
  for (std::size_t i = m4; i < m; ++i) {
    const double e = ad[i] - bd[i];
    s[i % 4] += e * e;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double v_sum_sqrt(std::size_t n, const double* x) {
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_sqrt_pd(loadu(x + i)));
  double s[4];
  storeu(s, acc);
  for (std::size_t i = n4; i < n; ++i) s[i % 4] += std::sqrt(x[i]);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double v_sum_mag(std::size_t n, const cdouble* x) {
  const double* xd = reinterpret_cast<const double*>(x);
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d lo = loadu(xd + 2 * i), hi = loadu(xd + 2 * i + 4);
    const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(lo, lo), _mm256_mul_pd(hi, hi));
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(h));
  }
  double s[4];
  storeu(s, acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double re = xd[2 * i], im = xd[2 * i + 1];
    s[LANE[i % 4]] += std::sqrt(re * re + im * im);
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

cdouble v_dotc(std::size_t n, const cdouble* a, const cdouble* b) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  const std::size_t n4 = n & ~std::size_t(3);
  __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d alo = loadu(ad + 2 * i), ahi = loadu(ad + 2 * i + 4);
    const __m256d blo = loadu(bd + 2 * i), bhi = loadu(bd + 2 * i + 4);
    // re: ar*br + ai*bi per pair; im: ar*bi - ai*br per pair
    acc_re = _mm256_add_pd(
        acc_re, _mm256_hadd_pd(_mm256_mul_pd(alo, blo), _mm256_mul_pd(ahi, bhi)));
    acc_im = _mm256_add_pd(
        acc_im, _mm256_hsub_pd(_mm256_mul_pd(alo, swap_pairs(blo)),
                               _mm256_mul_pd(ahi, swap_pairs(bhi))));
  }
  double sr[4], si[4];
  storeu(sr, acc_re);
  storeu(si, acc_im);
  for (std::size_t i = n4; i < n; ++i) {
    const double ar = ad[2 * i], ai = ad[2 * i + 1];
    const double br = bd[2 * i], bi = bd[2 * i + 1];
    sr[LANE[i % 4]] += ar * br + ai * bi;
    si[LANE[i % 4]] += ar * bi - ai * br;
  }
  return {(sr[0] + sr[1]) + (sr[2] + sr[3]), (si[0] + si[1]) + (si[2] + si[3])};
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t = {
      v_axpy_real, v_cmul,         v_cmul_conj,      v_cmul_to,  v_sub,
      v_mul_real,  v_scale,        v_extragradient,  v_prox_data_step,
      v_add_sq_mag, v_clip_factors, v_sqrt_real,
      v_sum_sq_mag, v_sum_sq_mag_diff, v_sum_sqrt, v_sum_mag, v_dotc,
  };
  return &t;
}

}  // namespace recon::kernels::detail

#else

namespace recon::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace recon::kernels::detail

#endif
