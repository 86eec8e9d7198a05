#pragma once

#include <string>
#include <utility>
#include <vector>

#include "recon/config.hpp"
#include "recon/simulation.hpp"
#include "recon/solver.hpp"
#include "recon/types.hpp"

namespace recon::exp {

// Adjoint with density compensation; the motion-averaged baseline.
CVec gridding_recon(const Grid2& grid, const CVec& samples, const traj::Trajectory& trajectory,
                    const traj::DensityWeights& weights);

// Assembles the per-state operator (analytic coil maps regenerated from the
// bundle dimensions), weights the stored samples, and runs PDHG. Both the
// in-memory and the load-from-disk paths go through here, which is what
// makes them bit-identical.
std::pair<EchoStack, solver::SolverTrace> reconstruct_bundle(const sim::KSpaceBundle& bundle,
                                                             const cfg::SolverConfig& scfg,
                                                             int dcf_iterations);

RVec magnitude(const CVec& v);

// Each command writes its artifacts under c.out_dir (created if needed),
// echoes the resolved config, and finishes with manifest.json. Returns the
// relative paths of everything written except the manifest itself.
std::vector<std::string> cmd_synth_rgb(const cfg::ExperimentConfig& c);
std::vector<std::string> cmd_phantom(const cfg::ExperimentConfig& c);
std::vector<std::string> cmd_recon(const cfg::ExperimentConfig& c);
std::vector<std::string> cmd_r2star(const cfg::ExperimentConfig& c);
std::vector<std::string> cmd_traj(const cfg::ExperimentConfig& c);

std::vector<std::string> run_experiment(const cfg::ExperimentConfig& c);

}  // namespace recon::exp
