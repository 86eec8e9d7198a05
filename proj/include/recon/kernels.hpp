#pragma once

// Data-parallel inner loops used by the operators and the solver. Every kernel
// has a scalar reference implementation and, where the ISA is available, an
// AVX2 (x86-64) or NEON (aarch64) variant selected once at startup.
//
// Bit-compatibility contract, relied on by the determinism tests:
//   * elementwise kernels perform the same IEEE operation sequence per element
//     in every backend (no FMA contraction), so outputs are bitwise identical;
//   * reductions accumulate into four interleaved partial sums with a fixed
//     lane assignment and combine them as (s0+s1)+(s2+s3), so sums are bitwise
//     identical across backends and independent of SIMD width.

#include <complex>
#include <cstddef>

namespace recon::kernels {

using cdouble = std::complex<double>;

enum class Backend { scalar, avx2, neon };

Backend active_backend();
bool backend_supported(Backend b);
// Overrides dispatch (tests only). Throws ArgumentError if unsupported here.
void force_backend(Backend b);
const char* backend_name(Backend b);

// ---- elementwise (bitwise identical across backends) ----

// y[i] += a * x[i]
void axpy_real(std::size_t n, double a, const cdouble* x, cdouble* y);
// x[i] *= a[i]
void cmul(std::size_t n, const cdouble* a, cdouble* x);
// x[i] *= conj(a[i])
void cmul_conj(std::size_t n, const cdouble* a, cdouble* x);
// out[i] = a[i] * b[i]
void cmul_to(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out);
// out[i] = a[i] - b[i]
void sub(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out);
// x[i] *= w[i]
void mul_real(std::size_t n, const double* w, cdouble* x);
// x[i] *= s
void scale(std::size_t n, double s, cdouble* x);
// out[i] = 2*next[i] - prev[i]
void extragradient(std::size_t n, const cdouble* next, const cdouble* prev, cdouble* out);
// z[i] = (z[i] + sigma*r[i]) / (1 + sigma)
void prox_data_step(std::size_t n, double sigma, const cdouble* r, cdouble* z);
// acc[i] += |x[i]|^2
void add_sq_mag(std::size_t n, const cdouble* x, double* acc);
// f[i] = nsq[i] > radius^2 ? radius/sqrt(nsq[i]) : 1.0
void clip_factors(std::size_t n, double radius, const double* nsq, double* f);
// x[i] = sqrt(x[i])
void sqrt_real(std::size_t n, double* x);

// ---- reductions (fixed accumulation order, bitwise stable) ----

double sum_sq_mag(std::size_t n, const cdouble* x);                       // sum |x|^2
double sum_sq_mag_diff(std::size_t n, const cdouble* a, const cdouble* b);  // sum |a-b|^2
double sum_sqrt(std::size_t n, const double* x);                          // sum sqrt(x)
double sum_mag(std::size_t n, const cdouble* x);                          // sum |x|
cdouble dotc(std::size_t n, const cdouble* a, const cdouble* b);          // sum conj(a)*b

bool all_finite(std::size_t n, const cdouble* x);

}  // namespace recon::kernels
