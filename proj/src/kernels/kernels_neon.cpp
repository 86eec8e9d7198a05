// NEON backend for aarch64. Mirrors the scalar reference exactly: separate
// multiply and add (no vfmaq), IEEE division and sqrt, and the shared LANE
// accumulation pattern, so results stay bitwise identical to the other
// backends.

#include "kernel_table.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace recon::kernels::detail {
namespace {

// lane-0 / lane-1 sign flips, exact bit operations
inline float64x2_t neg_lane0(float64x2_t v) {
  const uint64x2_t m = {0x8000000000000000ull, 0};
  return vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(v), m));
}
inline float64x2_t neg_lane1(float64x2_t v) {
  const uint64x2_t m = {0, 0x8000000000000000ull};
  return vreinterpretq_f64_u64(veorq_u64(vreinterpretq_u64_f64(v), m));
}
inline float64x2_t swap01(float64x2_t v) { return vextq_f64(v, v, 1); }

void v_axpy_real(std::size_t n, double a, const cdouble* x, cdouble* y) {
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  const std::size_t m = 2 * n, m2 = m & ~std::size_t(1);
  const float64x2_t av = vdupq_n_f64(a);
  for (std::size_t i = 0; i < m2; i += 2) {
    vst1q_f64(yd + i, vaddq_f64(vld1q_f64(yd + i), vmulq_f64(av, vld1q_f64(xd + i))));
  }
  for (std::size_t i = m2; i < m; ++i) yd[i] = yd[i] + a * xd[i];
}

inline float64x2_t cmul_one(float64x2_t av, float64x2_t xv) {
  // (xr*ar - xi*ai, xi*ar + xr*ai)
  const float64x2_t t1 = vmulq_f64(xv, vdupq_laneq_f64(av, 0));
  const float64x2_t t2 = vmulq_f64(swap01(xv), vdupq_laneq_f64(av, 1));
  return vaddq_f64(t1, neg_lane0(t2));
}

inline float64x2_t cmul_conj_one(float64x2_t av, float64x2_t xv) {
  // (xr*ar + xi*ai, xi*ar - xr*ai)
  const float64x2_t t1 = vmulq_f64(xv, vdupq_laneq_f64(av, 0));
  const float64x2_t t2 = vmulq_f64(swap01(xv), vdupq_laneq_f64(av, 1));
  return vaddq_f64(t1, neg_lane1(t2));
}

void v_cmul(std::size_t n, const cdouble* a, cdouble* x) {
  const double* ad = reinterpret_cast<const double*>(a);
  double* xd = reinterpret_cast<double*>(x);
  for (std::size_t i = 0; i < n; ++i) {
    vst1q_f64(xd + 2 * i, cmul_one(vld1q_f64(ad + 2 * i), vld1q_f64(xd + 2 * i)));
  }
}

void v_cmul_conj(std::size_t n, const cdouble* a, cdouble* x) {
  const double* ad = reinterpret_cast<const double*>(a);
  double* xd = reinterpret_cast<double*>(x);
  for (std::size_t i = 0; i < n; ++i) {
    vst1q_f64(xd + 2 * i, cmul_conj_one(vld1q_f64(ad + 2 * i), vld1q_f64(xd + 2 * i)));
  }
}

void v_cmul_to(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  double* od = reinterpret_cast<double*>(out);
  for (std::size_t i = 0; i < n; ++i) {
    vst1q_f64(od + 2 * i, cmul_one(vld1q_f64(ad + 2 * i), vld1q_f64(bd + 2 * i)));
  }
}

void v_sub(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  double* od = reinterpret_cast<double*>(out);
  const std::size_t m = 2 * n;
  for (std::size_t i = 0; i < m; i += 2) {
    vst1q_f64(od + i, vsubq_f64(vld1q_f64(ad + i), vld1q_f64(bd + i)));
  }
}

void v_mul_real(std::size_t n, const double* w, cdouble* x) {
  double* xd = reinterpret_cast<double*>(x);
  for (std::size_t i = 0; i < n; ++i) {
    vst1q_f64(xd + 2 * i, vmulq_f64(vld1q_f64(xd + 2 * i), vdupq_n_f64(w[i])));
  }
}

void v_scale(std::size_t n, double s, cdouble* x) {
  double* xd = reinterpret_cast<double*>(x);
  const std::size_t m = 2 * n;
  const float64x2_t sv = vdupq_n_f64(s);
  for (std::size_t i = 0; i < m; i += 2) {
    vst1q_f64(xd + i, vmulq_f64(vld1q_f64(xd + i), sv));
  }
}

void v_extragradient(std::size_t n, const cdouble* next, const cdouble* prev, cdouble* out) {
  const double* nd = reinterpret_cast<const double*>(next);
  const double* pd = reinterpret_cast<const double*>(prev);
  double* od = reinterpret_cast<double*>(out);
  const std::size_t m = 2 * n;
  const float64x2_t two = vdupq_n_f64(2.0);
  for (std::size_t i = 0; i < m; i += 2) {
    vst1q_f64(od + i, vsubq_f64(vmulq_f64(two, vld1q_f64(nd + i)), vld1q_f64(pd + i)));
  }
}

void v_prox_data_step(std::size_t n, double sigma, const cdouble* r, cdouble* z) {
  const double* rd = reinterpret_cast<const double*>(r);
  double* zd = reinterpret_cast<double*>(z);
  const std::size_t m = 2 * n;
  const float64x2_t sv = vdupq_n_f64(sigma), dv = vdupq_n_f64(1.0 + sigma);
  for (std::size_t i = 0; i < m; i += 2) {
    const float64x2_t t = vaddq_f64(vld1q_f64(zd + i), vmulq_f64(sv, vld1q_f64(rd + i)));
    vst1q_f64(zd + i, vdivq_f64(t, dv));
  }
}

void v_add_sq_mag(std::size_t n, const cdouble* x, double* acc) {
  const double* xd = reinterpret_cast<const double*>(x);
  const std::size_t n2 = n & ~std::size_t(1);
  for (std::size_t i = 0; i < n2; i += 2) {
    const float64x2_t c0 = vld1q_f64(xd + 2 * i), c1 = vld1q_f64(xd + 2 * i + 2);
    const float64x2_t sq = vpaddq_f64(vmulq_f64(c0, c0), vmulq_f64(c1, c1));
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), sq));
  }
  for (std::size_t i = n2; i < n; ++i) {
    const double re = xd[2 * i], im = xd[2 * i + 1];
    acc[i] = acc[i] + (re * re + im * im);
  }
}

void v_clip_factors(std::size_t n, double radius, const double* nsq, double* f) {
  const double r2 = radius * radius;
  const std::size_t n2 = n & ~std::size_t(1);
  const float64x2_t rv = vdupq_n_f64(radius), r2v = vdupq_n_f64(r2);
  const float64x2_t one = vdupq_n_f64(1.0);
  for (std::size_t i = 0; i < n2; i += 2) {
    const float64x2_t v = vld1q_f64(nsq + i);
    const uint64x2_t mask = vcgtq_f64(v, r2v);
    const float64x2_t q = vdivq_f64(rv, vsqrtq_f64(v));
    vst1q_f64(f + i, vbslq_f64(mask, q, one));
  }
  for (std::size_t i = n2; i < n; ++i) f[i] = nsq[i] > r2 ? radius / std::sqrt(nsq[i]) : 1.0;
}

void v_sqrt_real(std::size_t n, double* x) {
  const std::size_t n2 = n & ~std::size_t(1);
  for (std::size_t i = 0; i < n2; i += 2) vst1q_f64(x + i, vsqrtq_f64(vld1q_f64(x + i)));
  for (std::size_t i = n2; i < n; ++i) x[i] = std::sqrt(x[i]);
}

double v_sum_sq_mag(std::size_t n, const cdouble* x) {
  const double* d = reinterpret_cast<const double*>(x);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < m4; i += 4) {
    const float64x2_t v0 = vld1q_f64(d + i), v1 = vld1q_f64(d + i + 2);
    acc01 = vaddq_f64(acc01, vmulq_f64(v0, v0));
    acc23 = vaddq_f64(acc23, vmulq_f64(v1, v1));
  }
  double s[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                 vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
  for (std::size_t i = m4; i < m; ++i) s[i % 4] += d[i] * d[i];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double v_sum_sq_mag_diff(std::size_t n, const cdouble* a, const cdouble* b) {
  const double* ad = reinterpret_cast<const double*>(a);
  const double* bd = reinterpret_cast<const double*>(b);
  const std::size_t m = 2 * n, m4 = m & ~std::size_t(3);
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < m4; i += 4) {
    const float64x2_t e0 = vsubq_f64(vld1q_f64(ad + i), vld1q_f64(bd + i));
    const float64x2_t e1 = vsubq_f64(vld1q_f64(ad + i + 2), vld1q_f64(bd + i + 2));
    acc01 = vaddq_f64(acc01, vmulq_f64(e0, e0));
    acc23 = vaddq_f64(acc23, vmulq_f64(e1, e1));
  }
  double s[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                 vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
  for (std::size_t i = m4; i < m; ++i) {
    const double e = ad[i] - bd[i];
    s[i % 4] += e * e;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double v_sum_sqrt(std::size_t n, const double* x) {
  const std::size_t n4 = n & ~std::size_t(3);
  float64x2_t acc01 = vdupq_n_f64(0.0), acc23 = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    acc01 = vaddq_f64(acc01, vsqrtq_f64(vld1q_f64(x + i)));
    acc23 = vaddq_f64(acc23, vsqrtq_f64(vld1q_f64(x + i + 2)));
  }
  double s[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                 vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
  for (std::size_t i = n4; i < n; ++i) s[i % 4] += std::sqrt(x[i]);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double v_sum_mag(std::size_t n, const cdouble* x) {
  const double* xd = reinterpret_cast<const double*>(x);
  const std::size_t n4 = n & ~std::size_t(3);
  // accA holds lanes (c%4==0, c%4==2); accB (c%4==1, c%4==3), matching LANE.
  float64x2_t accA = vdupq_n_f64(0.0), accB = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    const float64x2_t c0 = vld1q_f64(xd + 2 * i), c1 = vld1q_f64(xd + 2 * i + 2);
    const float64x2_t c2 = vld1q_f64(xd + 2 * i + 4), c3 = vld1q_f64(xd + 2 * i + 6);
    const float64x2_t m01 = vsqrtq_f64(vpaddq_f64(vmulq_f64(c0, c0), vmulq_f64(c1, c1)));
    const float64x2_t m23 = vsqrtq_f64(vpaddq_f64(vmulq_f64(c2, c2), vmulq_f64(c3, c3)));
    accA = vaddq_f64(accA, vtrn1q_f64(m01, m23));
    accB = vaddq_f64(accB, vtrn2q_f64(m01, m23));
  }
  double s[4] = {vgetq_lane_f64(accA, 0), vgetq_lane_f64(accA, 1),
                 vgetq_lane_f64(accB, 0), vgetq_lane_f64(accB, 1)};
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
  float64x2_t reA = vdupq_n_f64(0.0), reB = vdupq_n_f64(0.0);
  float64x2_t imA = vdupq_n_f64(0.0), imB = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n4; i += 4) {
    float64x2_t pr[4], pi[4];
    for (int k = 0; k < 4; ++k) {
      const float64x2_t av = vld1q_f64(ad + 2 * (i + k));
      const float64x2_t bv = vld1q_f64(bd + 2 * (i + k));
      pr[k] = vmulq_f64(av, bv);                        // (ar*br, ai*bi)
      pi[k] = neg_lane1(vmulq_f64(av, swap01(bv)));     // (ar*bi, -ai*br)
    }
    const float64x2_t re01 = vpaddq_f64(pr[0], pr[1]), re23 = vpaddq_f64(pr[2], pr[3]);
    const float64x2_t im01 = vpaddq_f64(pi[0], pi[1]), im23 = vpaddq_f64(pi[2], pi[3]);
    reA = vaddq_f64(reA, vtrn1q_f64(re01, re23));
    reB = vaddq_f64(reB, vtrn2q_f64(re01, re23));
    imA = vaddq_f64(imA, vtrn1q_f64(im01, im23));
    imB = vaddq_f64(imB, vtrn2q_f64(im01, im23));
  }
  double sr[4] = {vgetq_lane_f64(reA, 0), vgetq_lane_f64(reA, 1),
                  vgetq_lane_f64(reB, 0), vgetq_lane_f64(reB, 1)};
  double si[4] = {vgetq_lane_f64(imA, 0), vgetq_lane_f64(imA, 1),
                  vgetq_lane_f64(imB, 0), vgetq_lane_f64(imB, 1)};
  for (std::size_t i = n4; i < n; ++i) {
    const double ar = ad[2 * i], ai = ad[2 * i + 1];
    const double br = bd[2 * i], bi = bd[2 * i + 1];
    sr[LANE[i % 4]] += ar * br + ai * bi;
    si[LANE[i % 4]] += ar * bi - ai * br;
  }
  return {(sr[0] + sr[1]) + (sr[2] + sr[3]), (si[0] + si[1]) + (si[2] + si[3])};
}

}  // namespace

const KernelTable* neon_table() {
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
const KernelTable* neon_table() { return nullptr; }
}  // namespace recon::kernels::detail

#endif
