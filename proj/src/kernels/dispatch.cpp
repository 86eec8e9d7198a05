#include "recon/kernels.hpp"

#include <atomic>
#include <cmath>

#include "kernel_table.hpp"
#include "recon/errors.hpp"

namespace recon::kernels {

// The build only compiles the backend matching the target arch; the other
// table resolves to null here.
#if !defined(__x86_64__)
const detail::KernelTable* detail::avx2_table() { return nullptr; }
#endif
#if !defined(__aarch64__)
const detail::KernelTable* detail::neon_table() { return nullptr; }
#endif

namespace {

using detail::KernelTable;

Backend detect() {
#if defined(__x86_64__)
  if (detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2")) return Backend::avx2;
#elif defined(__aarch64__)
  if (detail::neon_table() != nullptr) return Backend::neon;
#endif
  return Backend::scalar;
}

struct State {
  Backend backend;
  const KernelTable* table;
};

State make_state(Backend b) {
  switch (b) {
    case Backend::avx2:
      return {b, detail::avx2_table()};
    case Backend::neon:
      return {b, detail::neon_table()};
    case Backend::scalar:
    default:
      return {Backend::scalar, &detail::scalar_table()};
  }
}

State& state() {
  static State s = make_state(detect());
  return s;
}

const KernelTable& tab() { return *state().table; }

}  // namespace

Backend active_backend() { return state().backend; }

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__)
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::neon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

void force_backend(Backend b) {
  if (!backend_supported(b)) {
    throw ArgumentError(std::string("kernel backend not available on this host: ") +
                        backend_name(b));
  }
  state() = make_state(b);
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "?";
}

void axpy_real(std::size_t n, double a, const cdouble* x, cdouble* y) {
  tab().axpy_real(n, a, x, y);
}
void cmul(std::size_t n, const cdouble* a, cdouble* x) { tab().cmul(n, a, x); }
void cmul_conj(std::size_t n, const cdouble* a, cdouble* x) { tab().cmul_conj(n, a, x); }
void cmul_to(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  tab().cmul_to(n, a, b, out);
}
void sub(std::size_t n, const cdouble* a, const cdouble* b, cdouble* out) {
  tab().sub(n, a, b, out);
}
void mul_real(std::size_t n, const double* w, cdouble* x) { tab().mul_real(n, w, x); }
void scale(std::size_t n, double s, cdouble* x) { tab().scale(n, s, x); }
void extragradient(std::size_t n, const cdouble* next, const cdouble* prev, cdouble* out) {
  tab().extragradient(n, next, prev, out);
}
void prox_data_step(std::size_t n, double sigma, const cdouble* r, cdouble* z) {
  tab().prox_data_step(n, sigma, r, z);
}
void add_sq_mag(std::size_t n, const cdouble* x, double* acc) { tab().add_sq_mag(n, x, acc); }
void clip_factors(std::size_t n, double radius, const double* nsq, double* f) {
  tab().clip_factors(n, radius, nsq, f);
}
void sqrt_real(std::size_t n, double* x) { tab().sqrt_real(n, x); }

double sum_sq_mag(std::size_t n, const cdouble* x) { return tab().sum_sq_mag(n, x); }
double sum_sq_mag_diff(std::size_t n, const cdouble* a, const cdouble* b) {
  return tab().sum_sq_mag_diff(n, a, b);
}
double sum_sqrt(std::size_t n, const double* x) { return tab().sum_sqrt(n, x); }
double sum_mag(std::size_t n, const cdouble* x) { return tab().sum_mag(n, x); }
cdouble dotc(std::size_t n, const cdouble* a, const cdouble* b) { return tab().dotc(n, a, b); }

bool all_finite(std::size_t n, const cdouble* x) {
  const double* d = reinterpret_cast<const double*>(x);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    if (!std::isfinite(d[i])) return false;
  }
  return true;
}

}  // namespace recon::kernels
