#pragma once

// Internal: per-backend function tables. Only dispatch.cpp and the backend
// translation units include this.

#include <cstddef>

#include "recon/kernels.hpp"

namespace recon::kernels::detail {

// Lane assignment used by every 4-way reduction. A value produced from input
// element c lands in partial sum LANE[c % 4]; the final result is
// (s0 + s1) + (s2 + s3). The {0,2,1,3} order is what the AVX2 horizontal
// add/sub instructions naturally produce, and the scalar code copies it.
inline constexpr int LANE[4] = {0, 2, 1, 3};

struct KernelTable {
  void (*axpy_real)(std::size_t, double, const cdouble*, cdouble*);
  void (*cmul)(std::size_t, const cdouble*, cdouble*);
  void (*cmul_conj)(std::size_t, const cdouble*, cdouble*);
  void (*cmul_to)(std::size_t, const cdouble*, const cdouble*, cdouble*);
  void (*sub)(std::size_t, const cdouble*, const cdouble*, cdouble*);
  void (*mul_real)(std::size_t, const double*, cdouble*);
  void (*scale)(std::size_t, double, cdouble*);
  void (*extragradient)(std::size_t, const cdouble*, const cdouble*, cdouble*);
  void (*prox_data_step)(std::size_t, double, const cdouble*, cdouble*);
  void (*add_sq_mag)(std::size_t, const cdouble*, double*);
  void (*clip_factors)(std::size_t, double, const double*, double*);
  void (*sqrt_real)(std::size_t, double*);
  double (*sum_sq_mag)(std::size_t, const cdouble*);
  double (*sum_sq_mag_diff)(std::size_t, const cdouble*, const cdouble*);
  double (*sum_sqrt)(std::size_t, const double*);
  double (*sum_mag)(std::size_t, const cdouble*);
  cdouble (*dotc)(std::size_t, const cdouble*, const cdouble*);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled for x86-64
const KernelTable* neon_table();  // nullptr when not compiled for aarch64

}  // namespace recon::kernels::detail
