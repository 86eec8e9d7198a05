#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "recon/types.hpp"

namespace recon::quant {

struct R2StarMap {
  RVec r2star;                     // s^-1, 0 outside the mask
  RVec rho;                        // fitted amplitude, >= 0
  std::vector<std::uint8_t> mask;  // 1 where the fit is valid
};

// Voxelwise magnitude fit of m(TE) = rho * exp(-r2star * TE): log-linear
// least squares refined by damped Gauss-Newton (<= 20 iterations), r2star
// clamped to [0, 5000] s^-1. Voxels whose first-echo magnitude falls below
// 5% of the volume's 99th-percentile magnitude are masked out.
R2StarMap fit_r2star(const std::vector<RVec>& magnitudes, const RVec& te_ms);

// sqrt(sum_k |u_k|^2) per voxel
RVec rss_combine(const std::vector<CVec>& echoes);

// central-difference gradient magnitude with replicated borders
RVec gradient_magnitude(const RVec& img, Grid2 grid);

// Disk of voxels with (x-cx)^2 + (y-cy)^2 <= radius^2, image-index centers.
struct Roi {
  int cx = 0;
  int cy = 0;
  double radius = 6.0;
};

struct RoiReport {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

// Statistics over the disk, pooled across slices.
RoiReport roi_stats(std::span<const RVec> slices, Grid2 grid, const Roi& roi);
RoiReport roi_stats(const RVec& map, Grid2 grid, const Roi& roi);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares over (concentration, r2star) points.
Regression concentration_regression(const std::vector<std::pair<double, double>>& points);

struct BlandAltman {
  RVec percent_diff;  // (a_i - ref_i) / ref_i * 100
  double bias = 0.0;
  double lo = 0.0;  // bias -/+ 1.96 * std
  double hi = 0.0;
};

BlandAltman bland_altman(const RVec& values, const RVec& reference);

// Cross-channel edge agreement: per column, the location of the strongest
// vertical-derivative peak (parabolic sub-voxel refinement); the metric is
// the mean absolute location offset over channel pairs, restricted to
// columns whose weakest channel still carries a strong edge. Lower = better
// aligned edges.
double edge_misalignment(std::span<const RVec> channels, Grid2 grid);

RVec vertical_profile(const RVec& img, Grid2 grid, int column);

}  // namespace recon::quant
