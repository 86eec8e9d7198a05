#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recon/regularization.hpp"
#include "recon/simulation.hpp"
#include "recon/trajectory.hpp"
#include "recon/types.hpp"

namespace recon::cfg {

enum class Experiment { synth_rgb, phantom, recon, r2star, traj };

struct TrajectoryConfig {
  std::string kind = "radial";  // or "spiral"
  double acceleration = 6.0;    // sets the radial spoke count when spokes == 0
  int spokes = 0;               // 0 -> nyquist_spokes(matrix, acceleration)
  int samples_per_spoke = 0;    // 0 -> 2 * matrix
  std::string angle_scheme = "golden";
  int interleaves = 48;  // spiral: designed shot count; acceleration drops shots
  double fov_cm = 25.0;
  double res_mm = 1.0;
  double density_exponent = 6.0;
  int dcf_iterations = 20;
};

struct SolverConfig {
  double lambda = 0.5;
  double sigma = 0.125;
  double tau = 0.125;
  int iterations = 200;
  std::string coupling = "l2";  // or "l1"
};

struct MotionConfig {
  std::string kind = "periodic_translation";  // or "none"
  double amplitude_voxels = 6.0;
  double period_s = 0.5;
  double phase_rad = 0.0;
};

struct RgbConfig {
  int g_shift = 3;
  int b_shift = 6;
  double noise_std = 0.0;
  int profile_column = -1;  // -1 -> center column
};

struct PhantomConfig {
  int n_vials = 8;
  double conc_min_mm = 25.0;
  double conc_max_mm = 200.0;
  double relaxivity_r0 = 20.0;  // s^-1 at zero concentration
  double relaxivity_r1 = 5.0;   // s^-1 per mM
  int n_coils = 4;
  int n_states = 5;
  RVec te_ms = {0.032, 1.432, 2.832};
  int readouts = 150;  // total acquisition readouts before binning
  double noise_std = 1.0;
  double roi_radius = 4.0;
  MotionConfig motion;
  bool save_bundle = true;
};

struct ReconRunConfig {
  std::string bundle_dir;
};

struct R2StarRunConfig {
  std::vector<std::string> echo_paths;  // raw+sidecar base paths
  RVec te_ms;
};

// Single JSON document; defaults are materialized on load and the resolved
// config is echoed into the output directory. Malformed or invalid content
// raises ArgumentError (CLI exit 2); an unreadable path raises IoError
// (exit 4).
struct ExperimentConfig {
  Experiment kind = Experiment::synth_rgb;
  std::string out_dir = "out";
  std::uint64_t seed = 1234;
  unsigned threads = 0;  // 0 = hardware default
  int matrix = 128;
  TrajectoryConfig trajectory;
  SolverConfig solver;
  RgbConfig rgb;
  PhantomConfig phantom;
  ReconRunConfig recon;
  R2StarRunConfig r2star;

  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& origin);
std::string dump_config(const ExperimentConfig& c);
void write_resolved(const ExperimentConfig& c, const std::string& path);

Experiment parse_experiment(const std::string& s);
const char* experiment_name(Experiment e);
reg::Coupling parse_coupling(const std::string& s);
traj::AngleScheme parse_angle_scheme(const std::string& s);
sim::MotionModel to_motion_model(const MotionConfig& m);

// Image-domain trajectory for synth_rgb/traj runs (undersampling per image).
traj::Trajectory make_trajectory(const ExperimentConfig& c);
// Full phantom acquisition: one readout per repetition, later motion-binned.
traj::Trajectory make_acquisition_trajectory(const ExperimentConfig& c);

}  // namespace recon::cfg
