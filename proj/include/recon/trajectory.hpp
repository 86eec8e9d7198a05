#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace recon::traj {

// Sample coordinates in normalized k-space, each component in [-0.5, 0.5).
// readout tags samples with the spoke/interleave they belong to and is
// nondecreasing along the sample list.
struct Trajectory {
  std::vector<double> kx;
  std::vector<double> ky;
  std::vector<std::uint32_t> readout;

  std::size_t size() const { return kx.size(); }
  std::size_t num_readouts() const { return readout.empty() ? 0 : readout.back() + 1; }
  void validate() const;  // throws ArgumentError on any violated invariant
};

struct DensityWeights {
  std::vector<double> w;  // nonnegative, one per sample, sums to 1
  // internal gridding geometry, kept so the fixed-point residual can be
  // re-evaluated against the same operator that produced the weights
  int grid_size = 0;
  double gridding_scale = 1.0;
};

enum class AngleScheme { uniform, golden };

// Spoke count for a target acceleration R at a given matrix size,
// ceil((pi/2) * matrix / R).
int nyquist_spokes(int matrix_size, double acceleration);

// Diameter spokes through k-space center; samples run radially from -0.5 to
// just under +0.5. Angles: uniform pi*i/n or golden-angle increments.
Trajectory gen_radial(int matrix_size, int num_spokes, int samples_per_spoke,
                      AngleScheme scheme);

// Variable-density spiral: radius 0.5 * f^alpha over turn fraction f, rotated
// copies per interleave. Turns per interleave are matrix/(2*interleaves), so
// alpha = 1 is radially Nyquist-dense and alpha > 1 thins the periphery.
// Consecutive samples are spaced by at most min(0.9/matrix, the k-space step
// a Gmax = 80 mT/m gradient covers in one 4 us dwell at the given FOV).
Trajectory gen_vd_spiral(int matrix_size, int num_interleaves, double fov_cm, double res_mm,
                         double density_exponent);

// Pipe-Menon fixed point w <- w / (Gw), G = Kaiser-Bessel spread + regrid on
// an oversampled grid (2 * matrix_size; inferred from sample spacing when
// matrix_size = 0). Weights are normalized so the density-compensated
// point-spread function has unit central value, i.e. sum(w) = 1.
DensityWeights compute_density_weights(const Trajectory& traj, int iterations = 20,
                                       int matrix_size = 0);

// G*w under the operator scaling recorded in the weights; near 1 everywhere
// once the fixed point has converged.
std::vector<double> density_residual(const Trajectory& traj, const DensityWeights& dw);

// CSV with header kx,ky,readout; binary is a 16-byte header (magic + sample
// count) followed by little-endian float64 (kx, ky) pairs.
void write_csv(const Trajectory& traj, const std::string& path);
Trajectory read_csv(const std::string& path);
void write_binary(const Trajectory& traj, const std::string& path);
// samples_per_readout reassigns readout tags on load (the binary format
// stores coordinates only); 0 puts every sample in one readout.
Trajectory read_binary(const std::string& path, std::size_t samples_per_readout = 0);

}  // namespace recon::traj
