#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "recon/trajectory.hpp"
#include "recon/types.hpp"

namespace recon::sim {

// One readout per repetition; matches the acquisition the phantom study
// mimics (TR = 11.4 ms).
inline constexpr double kReadoutIntervalS = 0.0114;

// Piecewise-constant color test card with strong horizontal edges, so
// vertical channel misalignment shows up in column profiles.
struct RgbPhantom {
  Grid2 grid;
  RVec r, g, b;
  int g_shift = 0;  // applied vertical shifts, voxels
  int b_shift = 0;

  const RVec& channel(int i) const;
  void validate() const;
};

RgbPhantom make_rgb_phantom(Grid2 grid);

// Integer circular shift of the G and B channels along the vertical axis
// (positive = down). |shift| must stay below grid/4.
RgbPhantom shift_channels(const RgbPhantom& img, int g_shift, int b_shift);

struct Vial {
  double cx = 0.0;  // centered voxel coordinates, 0 = image center
  double cy = 0.0;
  double radius = 1.0;
  double concentration_mM = 0.0;
  double r2star = 0.0;  // s^-1
  double proton_density = 1.0;
};

struct VialPhantom {
  Grid2 grid;
  std::vector<Vial> vials;
  double background = 0.0;

  void validate() const;  // vials inside FOV at rest, concentrations positive
};

// Ring of n vials, concentrations evenly spaced over [conc_min, conc_max] mM,
// r2star assigned by the linear relaxivity model r0 + r1 * concentration.
VialPhantom make_vial_phantom(Grid2 grid, int n_vials, double conc_min_mM, double conc_max_mM,
                              double relaxivity_r0, double relaxivity_r1);

// Proton density with 4x4 supersampled partial-volume edges.
RVec rasterize_rho(const VialPhantom& ph);
// Per-voxel decay rate (s^-1); a voxel takes a vial's rate at majority coverage.
RVec rasterize_r2star(const VialPhantom& ph);

enum class MotionKind { none, periodic_translation };

struct MotionModel {
  MotionKind kind = MotionKind::none;
  double amplitude_voxels = 0.0;
  double period_s = 1.0;
  double phase_rad = 0.0;

  void validate() const;
  double displacement(double t_s) const;  // vertical shift in voxels
};

struct RespSignal {
  RVec amplitude;  // one per readout
  RVec time_s;

  void validate() const;
};

enum class RespPattern { sinusoid, deep };

// Deterministic surrogate waveform sampled at kReadoutIntervalS; "deep"
// doubles the amplitude and halves the rate.
RespSignal synth_resp_signal(std::size_t n_readouts, double period_s, RespPattern pattern);

// Continuously acquired multi-echo samples over the full trajectory, before
// motion binning. samples indexed echo * n_coils + coil.
struct SampleStream {
  Grid2 grid;
  traj::Trajectory traj;
  RVec te_ms;
  int n_coils = 0;
  std::uint64_t seed = 0;
  std::vector<CVec> samples;

  int n_echoes() const { return static_cast<int>(te_ms.size()); }
};

// Forward-simulates each readout at its acquisition time: the phantom decays
// per echo as rho * exp(-r2star * TE), is weighted by each coil map, sampled
// by NUFFT, translated by the motion model via an exact per-readout linear
// phase ramp, and corrupted by circular complex Gaussian noise of standard
// deviation noise_std (per complex sample). The returned RespSignal records
// the true displacement at every readout.
std::pair<SampleStream, RespSignal> simulate_multiecho_kspace(
    const VialPhantom& phantom, const traj::Trajectory& trajectory,
    const std::vector<CVec>& coil_maps, RVec te_ms, const MotionModel& motion, double noise_std,
    std::uint64_t seed);

// Adds readout-keyed noise to one sample vector; streams derive from
// (seed, stream_tag, readout) counters, so generation order and worker count
// do not matter.
void add_noise(CVec& samples, const traj::Trajectory& trajectory, double noise_std,
               std::uint64_t seed, std::uint64_t stream_tag);

// Motion-binned acquisition: per state a trajectory slice plus one sample
// vector per (echo, coil), indexed (echo * n_coils + coil) * n_states + state.
struct KSpaceBundle {
  Grid2 grid;
  int n_coils = 0;
  int n_states = 0;
  RVec te_ms;
  std::uint64_t seed = 0;
  std::size_t samples_per_readout = 0;
  std::vector<traj::Trajectory> state_traj;
  std::vector<CVec> samples;
  RespSignal resp;                                         // full acquisition record
  std::vector<std::vector<std::uint32_t>> state_readouts;  // acquisition ids per state

  int n_echoes() const { return static_cast<int>(te_ms.size()); }
  std::size_t sample_index(int echo, int coil, int state) const;
  void validate() const;
};

// Equal-count amplitude binning: readouts sorted by respiratory amplitude,
// split into n_states groups of floor(M / n_states); leftover readouts drop
// from the high-amplitude end. Bin 0 is the lowest-amplitude (end-expiration)
// state. Within a bin readouts keep acquisition order.
KSpaceBundle bin_kspace(const SampleStream& stream, const RespSignal& resp, int n_states);

// C smooth complex maps: Gaussian lobes at equiangular positions around the
// FOV with mild linear phases (coil 0 has zero phase), normalized so
// sum_j |S_j|^2 = 1 at every voxel.
std::vector<CVec> gen_coil_maps(int n_coils, Grid2 grid);

// Directory layout: meta.json, traj_state###.bin, samples_e##_c##_s###.bin,
// resp.csv. Floats travel as little-endian binary, so save/load round-trips
// bitwise.
void save_bundle(const KSpaceBundle& bundle, const std::string& dir);
KSpaceBundle load_bundle(const std::string& dir);

}  // namespace recon::sim
