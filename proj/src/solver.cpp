#include "recon/solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"
#include "recon/threading.hpp"

namespace recon::solver {

namespace k = recon::kernels;

namespace {

class IdentityOp final : public DataOperator {
 public:
  IdentityOp(std::size_t n_voxels, std::size_t n_states) : n_(n_voxels), t_(n_states) {
    if (n_ == 0 || t_ == 0) throw ArgumentError("identity operator needs nonzero dims");
  }
  std::size_t n_voxels() const override { return n_; }
  std::size_t n_states() const override { return t_; }
  std::size_t n_coils() const override { return 1; }
  std::size_t n_blocks() const override { return 1; }
  std::size_t block_size(std::size_t) const override { return n_ * t_; }
  void forward(const MotionResolvedImage& u, std::size_t, std::size_t,
               CVec& out) const override {
    out = u.data;
  }
  void adjoint_add(const CVec& z, std::size_t, std::size_t,
                   MotionResolvedImage& out) const override {
    k::axpy_real(z.size(), 1.0, z.data(), out.data.data());
  }
  CVec weight_data(const CVec& raw, std::size_t) const override { return raw; }

 private:
  std::size_t n_, t_;
};

// sqrt(w) with the unit-sum weights is the whole operator calibration: for a
// Cartesian trajectory w = 1/N and sqrt(w) * F is unitary, so ||A|| stays
// near 1 on any sampling pattern the density compensation can flatten.
RVec sqrt_weights(const traj::DensityWeights& w) {
  RVec out(w.w.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(w.w[i] >= 0.0)) throw ArgumentError("density weights must be nonnegative");
    out[i] = std::sqrt(w.w[i]);
  }
  return out;
}

class PlanarNufftOp final : public DataOperator {
 public:
  PlanarNufftOp(Grid2 grid, traj::Trajectory trajectory, traj::DensityWeights weights)
      : grid_(grid), plan_(grid, nufft::kDefaultOversampling, nufft::kDefaultKernelWidth), traj_(std::move(trajectory)) {
    traj_.validate();
    if (weights.w.size() != traj_.size()) {
      throw ArgumentError("weights length does not match trajectory");
    }
    sqrtw_ = sqrt_weights(weights);
  }
  std::size_t n_voxels() const override { return static_cast<std::size_t>(grid_.nx); }
  std::size_t n_states() const override { return static_cast<std::size_t>(grid_.ny); }
  std::size_t n_coils() const override { return 1; }
  std::size_t n_blocks() const override { return 1; }
  std::size_t block_size(std::size_t) const override { return traj_.size(); }
  void forward(const MotionResolvedImage& u, std::size_t, std::size_t,
               CVec& out) const override {
    // the (voxel, state) array is exactly the row-major image
    out = nufft::nufft_forward(plan_, u.data, traj_);
    k::mul_real(out.size(), sqrtw_.data(), out.data());
  }
  void adjoint_add(const CVec& z, std::size_t, std::size_t,
                   MotionResolvedImage& out) const override {
    CVec zw = z;
    k::mul_real(zw.size(), sqrtw_.data(), zw.data());
    const CVec img = nufft::nufft_adjoint(plan_, zw, traj_);
    k::axpy_real(img.size(), 1.0, img.data(), out.data.data());
  }
  CVec weight_data(const CVec& raw, std::size_t) const override {
    CVec out = raw;
    k::mul_real(out.size(), sqrtw_.data(), out.data());
    return out;
  }

 private:
  Grid2 grid_;
  nufft::NufftPlan plan_;
  traj::Trajectory traj_;
  RVec sqrtw_;
};

class PerStateNufftOp final : public DataOperator {
 public:
  PerStateNufftOp(Grid2 grid, std::vector<traj::Trajectory> trajs,
                  std::vector<traj::DensityWeights> weights, std::vector<CVec> coil_maps)
      : grid_(grid), plan_(grid, nufft::kDefaultOversampling, nufft::kDefaultKernelWidth), trajs_(std::move(trajs)), coils_(std::move(coil_maps)) {
    if (trajs_.empty() || weights.size() != trajs_.size()) {
      throw ArgumentError("need one trajectory and one weight set per motion state");
    }
    if (coils_.empty()) throw ArgumentError("need at least one coil map");
    for (const auto& c : coils_) {
      if (c.size() != grid_.voxels()) throw ArgumentError("coil map does not match grid");
    }
    sqrtw_.reserve(trajs_.size());
    for (std::size_t t = 0; t < trajs_.size(); ++t) {
      trajs_[t].validate();
      if (weights[t].w.size() != trajs_[t].size()) {
        throw ArgumentError("weights length does not match trajectory for a state");
      }
      sqrtw_.push_back(sqrt_weights(weights[t]));
    }
  }
  std::size_t n_voxels() const override { return grid_.voxels(); }
  std::size_t n_states() const override { return trajs_.size(); }
  std::size_t n_coils() const override { return coils_.size(); }
  std::size_t n_blocks() const override { return trajs_.size(); }
  std::size_t block_size(std::size_t b) const override { return trajs_.at(b).size(); }
  void forward(const MotionResolvedImage& u, std::size_t coil, std::size_t b,
               CVec& out) const override {
    CVec s(grid_.voxels());
    k::cmul_to(s.size(), coils_.at(coil).data(), u.state(b), s.data());
    out = nufft::nufft_forward(plan_, s, trajs_[b]);
    k::mul_real(out.size(), sqrtw_[b].data(), out.data());
  }
  void adjoint_add(const CVec& z, std::size_t coil, std::size_t b,
                   MotionResolvedImage& out) const override {
    CVec zw = z;
    k::mul_real(zw.size(), sqrtw_.at(b).data(), zw.data());
    CVec img = nufft::nufft_adjoint(plan_, zw, trajs_[b]);
    k::cmul_conj(img.size(), coils_.at(coil).data(), img.data());
    k::axpy_real(img.size(), 1.0, img.data(), out.state(b));
  }
  CVec weight_data(const CVec& raw, std::size_t b) const override {
    CVec out = raw;
    if (out.size() != sqrtw_.at(b).size()) throw ArgumentError("raw data does not match block");
    k::mul_real(out.size(), sqrtw_[b].data(), out.data());
    return out;
  }

 private:
  Grid2 grid_;
  nufft::NufftPlan plan_;
  std::vector<traj::Trajectory> trajs_;
  std::vector<RVec> sqrtw_;
  std::vector<CVec> coils_;
};

}  // namespace

std::shared_ptr<const DataOperator> make_identity_operator(std::size_t n_voxels,
                                                           std::size_t n_states) {
  return std::make_shared<IdentityOp>(n_voxels, n_states);
}

std::shared_ptr<const DataOperator> make_planar_nufft_operator(Grid2 grid,
                                                               traj::Trajectory trajectory,
                                                               traj::DensityWeights weights) {
  return std::make_shared<PlanarNufftOp>(grid, std::move(trajectory), std::move(weights));
}

std::shared_ptr<const DataOperator> make_per_state_nufft_operator(
    Grid2 grid, std::vector<traj::Trajectory> state_trajectories,
    std::vector<traj::DensityWeights> state_weights, std::vector<CVec> coil_maps) {
  return std::make_shared<PerStateNufftOp>(grid, std::move(state_trajectories),
                                           std::move(state_weights), std::move(coil_maps));
}

std::size_t ReconProblem::y_index(std::size_t echo, std::size_t coil, std::size_t block) const {
  return (echo * op->n_coils() + coil) * op->n_blocks() + block;
}

void ReconProblem::validate() const {
  if (!op) throw ArgumentError("problem has no data operator");
  if (n_echoes == 0) throw ArgumentError("problem needs at least one echo");
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
  if (!(sigma > 0.0) || !(tau > 0.0)) throw ArgumentError("sigma and tau must be positive");
  if (n_iters < 1) throw ArgumentError("n_iters must be >= 1");
  const std::size_t expect = n_echoes * op->n_coils() * op->n_blocks();
  if (y.size() != expect) throw ArgumentError("measurement block count mismatch");
  for (std::size_t kk = 0; kk < n_echoes; ++kk) {
    for (std::size_t j = 0; j < op->n_coils(); ++j) {
      for (std::size_t b = 0; b < op->n_blocks(); ++b) {
        if (y[y_index(kk, j, b)].size() != op->block_size(b)) {
          throw ArgumentError("measurement block size mismatch");
        }
      }
    }
  }
}

DualState make_zero_duals(const ReconProblem& p) {
  DualState d;
  d.xi.echoes.reserve(p.n_echoes);
  for (std::size_t kk = 0; kk < p.n_echoes; ++kk) {
    d.xi.echoes.emplace_back(p.op->n_voxels(), p.op->n_states());
  }
  d.zeta.resize(p.y.size());
  for (std::size_t i = 0; i < p.y.size(); ++i) d.zeta[i].assign(p.y[i].size(), cdouble{0, 0});
  return d;
}

EchoStack make_zero_stack(const ReconProblem& p) {
  EchoStack u;
  u.echoes.reserve(p.n_echoes);
  for (std::size_t kk = 0; kk < p.n_echoes; ++kk) {
    u.echoes.emplace_back(p.op->n_voxels(), p.op->n_states());
  }
  return u;
}

CVec forward_model(const ReconProblem& p, const MotionResolvedImage& u, std::size_t coil,
                   std::size_t block) {
  if (!p.op) throw ArgumentError("problem has no data operator");
  if (coil >= p.op->n_coils() || block >= p.op->n_blocks()) {
    throw ArgumentError("coil or block index out of range");
  }
  CVec out;
  p.op->forward(u, coil, block, out);
  return out;
}

CVec prox_data(CVec zeta_tilde, double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("sigma must be nonnegative");
  const double denom = 1.0 + sigma;
  double* zd = reinterpret_cast<double*>(zeta_tilde.data());
  for (std::size_t i = 0; i < 2 * zeta_tilde.size(); ++i) zd[i] = zd[i] / denom;
  return zeta_tilde;
}

namespace {

// sum over all (echo, coil, block) of ||A u - y_w||^2, reduced in index order
double data_residual_sq(const ReconProblem& p, const EchoStack& u) {
  const std::size_t C = p.op->n_coils(), B = p.op->n_blocks();
  const std::size_t n = p.n_echoes * C * B;
  std::vector<double> part(n, 0.0);
  threads::parallel_for(n, [&](std::size_t idx) {
    const std::size_t kk = idx / (C * B);
    const std::size_t j = (idx / B) % C;
    const std::size_t b = idx % B;
    CVec r;
    p.op->forward(u.echoes[kk], j, b, r);
    part[idx] = k::sum_sq_mag_diff(r.size(), r.data(), p.y[idx].data());
  });
  double s = 0.0;
  for (const double v : part) s += v;
  return s;
}

void check_shapes(const ReconProblem& p, const EchoStack& u) {
  if (u.echoes.size() != p.n_echoes) throw ArgumentError("echo count mismatch");
  for (const auto& e : u.echoes) {
    if (e.n_voxels != p.op->n_voxels() || e.n_states != p.op->n_states()) {
      throw ArgumentError("image shape does not match operator");
    }
  }
}

}  // namespace

IterRecord pdhg_step(const ReconProblem& p, EchoStack& u, EchoStack& u_bar, DualState& duals) {
  const auto& op = *p.op;
  const std::size_t E = p.n_echoes, C = op.n_coils(), B = op.n_blocks();
  const std::size_t NT = op.n_voxels() * op.n_states();
  check_shapes(p, u);
  check_shapes(p, u_bar);

  // xi <- project(xi + sigma * d/dt(u_bar))
  for (std::size_t kk = 0; kk < E; ++kk) {
    const MotionResolvedImage d = reg::temporal_diff(u_bar.echoes[kk]);
    k::axpy_real(NT, p.sigma, d.data.data(), duals.xi.echoes[kk].data.data());
  }
  duals.xi = reg::project_dual(std::move(duals.xi), p.lambda, p.coupling);

  // zeta <- (zeta + sigma (A u_bar - y)) / (1 + sigma), blockwise independent
  threads::parallel_for(E * C * B, [&](std::size_t idx) {
    const std::size_t kk = idx / (C * B);
    const std::size_t j = (idx / B) % C;
    const std::size_t b = idx % B;
    CVec r;
    op.forward(u_bar.echoes[kk], j, b, r);
    k::sub(r.size(), r.data(), p.y[idx].data(), r.data());
    k::prox_data_step(r.size(), p.sigma, r.data(), duals.zeta[idx].data());
  });

  // u <- u - tau (sum_j A_j^H zeta_j + d/dt^H xi); u_bar <- 2u' - u
  IterRecord rec;
  double change_sq = 0.0;
  for (std::size_t kk = 0; kk < E; ++kk) {
    MotionResolvedImage grad = reg::temporal_diff_adjoint(duals.xi.echoes[kk]);
    std::vector<MotionResolvedImage> coil_grad;
    coil_grad.reserve(C);
    for (std::size_t j = 0; j < C; ++j) coil_grad.emplace_back(op.n_voxels(), op.n_states());
    threads::parallel_for(C, [&](std::size_t j) {
      for (std::size_t b = 0; b < B; ++b) {
        op.adjoint_add(duals.zeta[p.y_index(kk, j, b)], j, b, coil_grad[j]);
      }
    });
    // fixed coil order keeps the reduction independent of the worker count
    for (std::size_t j = 0; j < C; ++j) {
      k::axpy_real(NT, 1.0, coil_grad[j].data.data(), grad.data.data());
    }

    MotionResolvedImage& uk = u.echoes[kk];
    const MotionResolvedImage u_prev = uk;
    k::axpy_real(NT, -p.tau, grad.data.data(), uk.data.data());
    if (!k::all_finite(NT, uk.data.data())) {
      throw NumericError("non-finite values in primal iterate u (echo " + std::to_string(kk) +
                         ")");
    }
    k::extragradient(NT, uk.data.data(), u_prev.data.data(), u_bar.echoes[kk].data.data());
    change_sq += k::sum_sq_mag_diff(NT, uk.data.data(), u_prev.data.data());
  }
  rec.primal_change = std::sqrt(change_sq);
  rec.data_term = 0.5 * data_residual_sq(p, u);
  rec.tv_term = reg::vtv_value(u, p.coupling);
  rec.objective = rec.data_term + p.lambda * rec.tv_term;
  return rec;
}

std::pair<EchoStack, SolverTrace> reconstruct(const ReconProblem& p) {
  p.validate();
  EchoStack u = make_zero_stack(p);
  EchoStack u_bar = make_zero_stack(p);
  DualState duals = make_zero_duals(p);
  SolverTrace trace;
  trace.records.reserve(p.n_iters);
  for (int it = 1; it <= p.n_iters; ++it) {
    try {
      IterRecord rec = pdhg_step(p, u, u_bar, duals);
      rec.iter = it;
      trace.records.push_back(rec);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  return {std::move(u), std::move(trace)};
}

double objective_value(const ReconProblem& p, const EchoStack& u) {
  p.validate();
  check_shapes(p, u);
  return 0.5 * data_residual_sq(p, u) + p.lambda * reg::vtv_value(u, p.coupling);
}

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "iter,objective,data_term,tv_term,primal_change\n";
  char line[160];
  for (const auto& r : trace.records) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.objective,
                  r.data_term, r.tv_term, r.primal_change);
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace recon::solver
