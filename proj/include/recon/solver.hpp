#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "recon/nufft.hpp"
#include "recon/regularization.hpp"
#include "recon/trajectory.hpp"
#include "recon/types.hpp"

namespace recon::solver {

// Forward model for one echo, block-structured over (coil, data block). A
// data block is one motion state's sample set for the motion-resolved
// operator, or the whole sample set for operators that see the image series
// as a single plane. Implementations fold sqrt(density) into forward and
// adjoint; with unit-sum density weights that keeps the composite operator
// norm near 1, which is what makes the default 1/8 step sizes safe.
class DataOperator {
 public:
  virtual ~DataOperator() = default;
  virtual std::size_t n_voxels() const = 0;
  virtual std::size_t n_states() const = 0;
  virtual std::size_t n_coils() const = 0;
  virtual std::size_t n_blocks() const = 0;
  virtual std::size_t block_size(std::size_t b) const = 0;
  virtual void forward(const MotionResolvedImage& u, std::size_t coil, std::size_t b,
                       CVec& out) const = 0;
  virtual void adjoint_add(const CVec& z, std::size_t coil, std::size_t b,
                           MotionResolvedImage& out) const = 0;
  // applies the same weighting/normalization to raw measurements that
  // forward applies to images, so residuals compare like with like
  virtual CVec weight_data(const CVec& raw, std::size_t b) const = 0;
};

// F = I, C = 1, S = 1, D = 1; block is the whole (voxel, state) array.
std::shared_ptr<const DataOperator> make_identity_operator(std::size_t n_voxels,
                                                           std::size_t n_states);

// One 2D NUFFT over the full image; the motion-state axis is the image's
// vertical axis (states = rows). Single coil.
std::shared_ptr<const DataOperator> make_planar_nufft_operator(Grid2 grid,
                                                               traj::Trajectory trajectory,
                                                               traj::DensityWeights weights);

// Per motion state 2D NUFFT with coil sensitivities; block b = state b.
std::shared_ptr<const DataOperator> make_per_state_nufft_operator(
    Grid2 grid, std::vector<traj::Trajectory> state_trajectories,
    std::vector<traj::DensityWeights> state_weights, std::vector<CVec> coil_maps);

struct ReconProblem {
  std::shared_ptr<const DataOperator> op;
  std::size_t n_echoes = 1;
  // weighted measurements (op->weight_data applied), index (echo*C + coil)*B + block
  std::vector<CVec> y;
  double lambda = 1.0;
  reg::Coupling coupling = reg::Coupling::l2;
  int n_iters = 100;
  double sigma = 0.125;
  double tau = 0.125;

  std::size_t y_index(std::size_t echo, std::size_t coil, std::size_t block) const;
  void validate() const;
};

struct DualState {
  reg::TvDual xi;         // one per echo, shaped like the primal
  std::vector<CVec> zeta;  // same indexing as ReconProblem::y
};

DualState make_zero_duals(const ReconProblem& p);
EchoStack make_zero_stack(const ReconProblem& p);

struct IterRecord {
  int iter = 0;
  double objective = 0.0;
  double data_term = 0.0;
  double tv_term = 0.0;
  double primal_change = 0.0;
};

struct SolverTrace {
  std::vector<IterRecord> records;
};

// sqrt(D) F S_j applied to one echo on one data block
CVec forward_model(const ReconProblem& p, const MotionResolvedImage& u, std::size_t coil,
                   std::size_t block);

// resolvent of the dualized data term: elementwise division by (1 + sigma)
CVec prox_data(CVec zeta_tilde, double sigma);

// One PDHG iteration in standard Chambolle-Pock order: dual ascent on xi
// (projected) and zeta (prox) at the extragradient point, primal descent
// with the updated duals, then u_bar = 2u' - u. Mutates its arguments.
IterRecord pdhg_step(const ReconProblem& p, EchoStack& u, EchoStack& u_bar, DualState& duals);

// n_iters steps from zero initialization
std::pair<EchoStack, SolverTrace> reconstruct(const ReconProblem& p);

// (1/2) sum ||sqrt(D)(F S u - y)||^2 + lambda * vtv
double objective_value(const ReconProblem& p, const EchoStack& u);

void write_trace_csv(const SolverTrace& trace, const std::string& path);

}  // namespace recon::solver
