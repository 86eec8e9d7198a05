// End-to-end acceptance checks. Each numbered group prints one PASS/FAIL
// line; the process exits nonzero if any group fails. Groups 5, 6 and 8 run
// the shipped experiment configs into a scratch directory and inspect the
// artifacts; group 9 reuses the solver traces those runs produced.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "recon/config.hpp"
#include "recon/errors.hpp"
#include "recon/experiments.hpp"
#include "recon/nufft.hpp"
#include "recon/quantify.hpp"
#include "recon/regularization.hpp"
#include "recon/solver.hpp"
#include "recon/threading.hpp"
#include "recon/trajectory.hpp"
#include "recon/types.hpp"

using recon::cdouble;
using recon::CVec;
using recon::EchoStack;
using recon::Grid2;
using recon::MotionResolvedImage;
using recon::RVec;
namespace cfg = recon::cfg;
namespace nufft = recon::nufft;
namespace quant = recon::quant;
namespace reg = recon::reg;
namespace solver = recon::solver;
namespace traj = recon::traj;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Context {
  fs::path work;
  std::vector<solver::SolverTrace> solver_traces;  // collected by group 3
  std::vector<fs::path> trace_files;               // collected by groups 5 and 6
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, ap);
  va_end(ap);
  return buf;
}

CVec random_cvec(std::size_t n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  CVec v(n);
  for (auto& x : v) x = {d(eng), d(eng)};
  return v;
}

double rel_l2_diff(const CVec& a, const CVec& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

// comma-separated table with a header row; every cell kept as text
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    throw recon::IoError("missing csv column: " + name);
  }
  double num(std::size_t row, const std::string& name) const {
    return std::strtod(rows.at(row).at(std::size_t(col(name))).c_str(), nullptr);
  }
};

Csv read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw recon::IoError("cannot open " + path.string());
  Csv out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      out.header = std::move(cells);
      first = false;
    } else {
      out.rows.push_back(std::move(cells));
    }
  }
  return out;
}

std::map<std::string, double> csv_key_value(const fs::path& path,
                                            const std::string& key_col,
                                            const std::string& val_col) {
  const Csv t = read_csv(path);
  const int kc = t.col(key_col), vc = t.col(val_col);
  std::map<std::string, double> out;
  for (const auto& r : t.rows)
    out[r.at(std::size_t(kc))] = std::strtod(r.at(std::size_t(vc)).c_str(), nullptr);
  return out;
}

cfg::ExperimentConfig load_shipped(const char* name, const fs::path& out_dir) {
  auto c = cfg::load_config(std::string(CONFIG_DIR) + "/" + name);
  c.out_dir = out_dir.string();
  return c;
}

EchoStack random_stack(std::size_t e, std::size_t n, int t, std::mt19937_64& eng) {
  EchoStack st;
  for (std::size_t k = 0; k < e; ++k) {
    MotionResolvedImage img(n, t);
    img.data = random_cvec(img.size(), eng);
    st.echoes.push_back(std::move(img));
  }
  return st;
}

// --- group 1: gridding nufft vs direct transform ---------------------------

Outcome check_nufft() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 32;
  const Grid2 grid{n, n};
  std::mt19937_64 eng(101);

  traj::Trajectory t;
  std::uniform_real_distribution<double> dk(-0.5, 0.49999999);
  for (int s = 0; s < 500; ++s) {
    t.kx.push_back(dk(eng));
    t.ky.push_back(dk(eng));
    t.readout.push_back(0);
  }
  t.validate();

  const CVec img = random_cvec(grid.voxels(), eng);
  const auto plan = nufft::plan_nufft(grid);
  const CVec fwd = nufft::nufft_forward(plan, img, t);

  CVec direct(t.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    cdouble acc{0.0, 0.0};
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double ph =
            -2.0 * M_PI * (t.kx[s] * (x - n / 2) + t.ky[s] * (y - n / 2));
        acc += img[std::size_t(y) * n + x] * cdouble{std::cos(ph), std::sin(ph)};
      }
    direct[s] = acc;
  }
  const double fwd_err = rel_l2_diff(fwd, direct);

  const CVec z = random_cvec(t.size(), eng);
  const CVec adj = nufft::nufft_adjoint(plan, z, t);
  cdouble lhs{0.0, 0.0}, rhs{0.0, 0.0};
  for (std::size_t s = 0; s < t.size(); ++s) lhs += std::conj(fwd[s]) * z[s];
  for (std::size_t v = 0; v < img.size(); ++v) rhs += std::conj(img[v]) * adj[v];
  const double adj_err = std::abs(lhs - rhs) / std::abs(lhs);

  const double secs = seconds_since(t0);
  const bool ok = fwd_err < 1e-4 && adj_err < 1e-5 && secs < 5.0;
  return {ok, fmt("forward rel err %.3g (limit 1e-4), adjoint rel err %.3g "
                  "(limit 1e-5), %.2f s (limit 5 s)",
                  fwd_err, adj_err, secs)};
}

// --- group 2: temporal difference adjoint and dual projection --------------

Outcome check_operators() {
  std::mt19937_64 eng(202);
  std::uniform_int_distribution<int> pick_e(1, 4), pick_n(1, 8), pick_t(1, 6);
  std::uniform_real_distribution<double> pick_l(0.05, 3.0);
  double worst_adj = 0.0, worst_ball = 0.0;
  int idempotence_breaks = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t e = std::size_t(pick_e(eng)), n = std::size_t(pick_n(eng));
    const int t = pick_t(eng);
    const double lambda = pick_l(eng);
    const auto coupling = (trial % 2 == 0) ? reg::Coupling::l2 : reg::Coupling::l1;

    // <Du, d> == <u, D*d>, summed over echoes
    const EchoStack u = random_stack(e, n, t, eng);
    const EchoStack d = random_stack(e, n, t, eng);
    cdouble lhs{0.0, 0.0}, rhs{0.0, 0.0};
    for (std::size_t k = 0; k < e; ++k) {
      const auto du = reg::temporal_diff(u.echoes[k]);
      const auto ad = reg::temporal_diff_adjoint(d.echoes[k]);
      for (std::size_t i = 0; i < du.size(); ++i) {
        lhs += std::conj(du.data[i]) * d.echoes[k].data[i];
        rhs += std::conj(u.echoes[k].data[i]) * ad.data[i];
      }
    }
    worst_adj = std::max(worst_adj,
                         std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));

    // projection: idempotent bitwise, image inside the dual ball
    reg::TvDual xi = random_stack(e, n, t, eng);
    // scale up so the projection actually clips in most trials
    for (auto& echo : xi.echoes)
      for (auto& c : echo.data) c *= 4.0;
    const reg::TvDual p1 = reg::project_dual(xi, lambda, coupling);
    const reg::TvDual p2 = reg::project_dual(p1, lambda, coupling);
    for (std::size_t k = 0; k < e; ++k)
      if (std::memcmp(p1.echoes[k].data.data(), p2.echoes[k].data.data(),
                      p1.echoes[k].size() * sizeof(cdouble)) != 0)
        ++idempotence_breaks;

    const double radius = 1.0 / lambda;
    const std::size_t m = p1.echoes[0].size();
    for (std::size_t i = 0; i < m; ++i) {
      if (coupling == reg::Coupling::l2) {
        double nsq = 0.0;
        for (std::size_t k = 0; k < e; ++k) nsq += std::norm(p1.echoes[k].data[i]);
        worst_ball = std::max(worst_ball, std::sqrt(nsq) - radius);
      } else {
        for (std::size_t k = 0; k < e; ++k)
          worst_ball = std::max(worst_ball, std::abs(p1.echoes[k].data[i]) - radius);
      }
    }
  }

  const bool ok = worst_adj < 1e-12 && idempotence_breaks == 0 && worst_ball <= 1e-12;
  return {ok, fmt("1000 instances: adjoint identity rel err %.3g (limit 1e-12), "
                  "idempotence breaks %d, ball overshoot %.3g (limit 1e-12)",
                  worst_adj, idempotence_breaks, worst_ball)};
}

// --- group 3: pdhg vs independent oracles -----------------------------------

// plain-loop re-implementation of the denoising solver (F = identity)
namespace oracle {

using Series = std::vector<cdouble>;

Series diff(const Series& u, std::size_t n, int t) {
  Series d(u.size(), cdouble{0.0, 0.0});
  for (int tt = 0; tt + 1 < t; ++tt)
    for (std::size_t v = 0; v < n; ++v)
      d[std::size_t(tt) * n + v] =
          u[std::size_t(tt + 1) * n + v] - u[std::size_t(tt) * n + v];
  return d;
}

Series diff_adj(const Series& d, std::size_t n, int t) {
  Series a(d.size(), cdouble{0.0, 0.0});
  for (int tt = 0; tt < t; ++tt)
    for (std::size_t v = 0; v < n; ++v) {
      cdouble val{0.0, 0.0};
      if (tt > 0) val += d[std::size_t(tt - 1) * n + v];
      if (tt + 1 < t) val -= d[std::size_t(tt) * n + v];
      a[std::size_t(tt) * n + v] = val;
    }
  return a;
}

std::vector<Series> denoise(const std::vector<Series>& y, std::size_t n, int t,
                            double lambda, double sigma, double tau, int iters) {
  const std::size_t e_count = y.size(), m = n * std::size_t(t);
  const double radius = 1.0 / lambda;
  std::vector<Series> u(e_count, Series(m, cdouble{0.0, 0.0}));
  std::vector<Series> ubar = u, xi = u, zeta = u;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t k = 0; k < e_count; ++k) {
      const Series d = diff(ubar[k], n, t);
      for (std::size_t i = 0; i < m; ++i) xi[k][i] += sigma * d[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
      double nsq = 0.0;
      for (const auto& e : xi) nsq += std::norm(e[i]);
      if (nsq > radius * radius) {
        const double f = radius / std::sqrt(nsq);
        for (auto& e : xi) e[i] *= f;
      }
    }
    for (std::size_t k = 0; k < e_count; ++k)
      for (std::size_t i = 0; i < m; ++i)
        zeta[k][i] = (zeta[k][i] + sigma * (ubar[k][i] - y[k][i])) / (1.0 + sigma);
    for (std::size_t k = 0; k < e_count; ++k) {
      const Series adj = diff_adj(xi[k], n, t);
      for (std::size_t i = 0; i < m; ++i) {
        const cdouble unew = u[k][i] - tau * (adj[i] + zeta[k][i]);
        ubar[k][i] = 2.0 * unew - u[k][i];
        u[k][i] = unew;
      }
    }
  }
  return u;
}

}  // namespace oracle

Outcome check_pdhg(Context& ctx) {
  // (a) denoising against a ten-fold-iteration plain-loop reference
  const auto ta = std::chrono::steady_clock::now();
  std::mt19937_64 eng(303);
  const std::size_t n = 24;
  const int t = 5, iters = 200;
  const double lambda = 0.8;
  std::vector<CVec> y{random_cvec(n * t, eng), random_cvec(n * t, eng),
                      random_cvec(n * t, eng)};

  solver::ReconProblem p;
  p.op = solver::make_identity_operator(n, std::size_t(t));
  p.n_echoes = 3;
  p.y = y;
  p.lambda = lambda;
  p.coupling = reg::Coupling::l2;
  p.n_iters = iters;
  const auto [u, trace_a] = solver::reconstruct(p);
  const auto ref =
      oracle::denoise({y[0], y[1], y[2]}, n, t, lambda, p.sigma, p.tau, 10 * iters);
  double denoise_err = 0.0;
  for (std::size_t k = 0; k < 3; ++k)
    denoise_err = std::max(denoise_err, rel_l2_diff(u.echoes[k].data, ref[k]));
  const double secs_a = seconds_since(ta);
  ctx.solver_traces.push_back(trace_a);

  // (b) single-state recon against conjugate gradients on an explicit
  // weighted DFT matrix
  const auto tb = std::chrono::steady_clock::now();
  const int nn = 32;
  const Grid2 grid{nn, nn};
  auto tr = traj::gen_radial(nn, 2 * traj::nyquist_spokes(nn, 1.0), 2 * nn,
                             traj::AngleScheme::golden);
  auto dw = traj::compute_density_weights(tr, 20, nn);
  const std::size_t S = tr.size(), N = grid.voxels();

  std::vector<cdouble> M(S * N);
  for (std::size_t s = 0; s < S; ++s)
    for (int yy = 0; yy < nn; ++yy)
      for (int xx = 0; xx < nn; ++xx) {
        const double ph =
            -2.0 * M_PI * (tr.kx[s] * (xx - nn / 2) + tr.ky[s] * (yy - nn / 2));
        M[s * N + std::size_t(yy) * nn + xx] = {std::cos(ph), std::sin(ph)};
      }
  std::vector<double> sw(S);
  for (std::size_t s = 0; s < S; ++s) sw[s] = std::sqrt(dw.w[s]);

  const auto apply_fwd = [&](const CVec& x) {
    CVec out(S);
    for (std::size_t s = 0; s < S; ++s) {
      cdouble acc{0.0, 0.0};
      const cdouble* row = &M[s * N];
      for (std::size_t v = 0; v < N; ++v) acc += row[v] * x[v];
      out[s] = sw[s] * acc;
    }
    return out;
  };
  const auto apply_adj = [&](const CVec& z) {
    CVec out(N, cdouble{0.0, 0.0});
    for (std::size_t s = 0; s < S; ++s) {
      const cdouble c = sw[s] * z[s];
      const cdouble* row = &M[s * N];
      for (std::size_t v = 0; v < N; ++v) out[v] += std::conj(row[v]) * c;
    }
    return out;
  };

  CVec u0(N);
  for (int yy = 0; yy < nn; ++yy)
    for (int xx = 0; xx < nn; ++xx) {
      const double g1 =
          std::exp(-((xx - 12.0) * (xx - 12.0) + (yy - 14.0) * (yy - 14.0)) / 18.0);
      const double g2 =
          std::exp(-((xx - 21.0) * (xx - 21.0) + (yy - 19.0) * (yy - 19.0)) / 24.0);
      u0[std::size_t(yy) * nn + xx] = {g1, 0.5 * g2};
    }
  CVec y_w(S);
  for (std::size_t s = 0; s < S; ++s) {
    cdouble acc{0.0, 0.0};
    const cdouble* row = &M[s * N];
    for (std::size_t v = 0; v < N; ++v) acc += row[v] * u0[v];
    y_w[s] = sw[s] * acc;
  }

  CVec x(N, cdouble{0.0, 0.0});
  CVec r = apply_adj(y_w), pvec = r;
  double rs = 0;
  for (const auto& c : r) rs += std::norm(c);
  const double stop = 1e-20 * rs;
  for (int it = 0; it < 400 && rs > stop; ++it) {
    const CVec ap = apply_adj(apply_fwd(pvec));
    cdouble pap{0.0, 0.0};
    for (std::size_t v = 0; v < N; ++v) pap += std::conj(pvec[v]) * ap[v];
    const double alpha = rs / pap.real();
    double rs_new = 0;
    for (std::size_t v = 0; v < N; ++v) {
      x[v] += alpha * pvec[v];
      r[v] -= alpha * ap[v];
      rs_new += std::norm(r[v]);
    }
    for (std::size_t v = 0; v < N; ++v) pvec[v] = r[v] + (rs_new / rs) * pvec[v];
    rs = rs_new;
  }

  solver::ReconProblem q;
  q.op = solver::make_per_state_nufft_operator(grid, {tr}, {dw},
                                               {CVec(N, cdouble{1.0, 0.0})});
  q.n_echoes = 1;
  q.y = {y_w};
  q.lambda = 1.0;  // inert: one state has no temporal differences
  q.n_iters = 1500;
  const auto [uq, trace_b] = solver::reconstruct(q);
  const double ls_err = rel_l2_diff(uq.echoes[0].data, x);
  const double secs_b = seconds_since(tb);
  ctx.solver_traces.push_back(trace_b);

  const bool ok = denoise_err < 1e-3 && ls_err < 1e-3 && secs_a < 60.0 && secs_b < 60.0;
  return {ok, fmt("denoising vs 10x-iteration oracle rel err %.3g, least-squares "
                  "vs cg rel err %.3g (limits 1e-3), %.1f s + %.1f s (limit 60 s each)",
                  denoise_err, ls_err, secs_a, secs_b)};
}

// --- group 4: per-echo separability of the uncoupled problem ----------------

Outcome check_uncoupled_equality() {
  std::mt19937_64 eng(404);
  const int n = 16;
  const Grid2 grid{n, n};
  auto t0 = traj::gen_radial(n, 10, 24, traj::AngleScheme::golden);
  auto t1 = traj::gen_radial(n, 12, 24, traj::AngleScheme::uniform);
  auto w0 = traj::compute_density_weights(t0, 15, n);
  auto w1 = traj::compute_density_weights(t1, 15, n);
  const CVec flat(grid.voxels(), cdouble{1.0, 0.0});

  const std::size_t e = 3;
  std::vector<CVec> y;
  for (std::size_t k = 0; k < e; ++k) {
    y.push_back(random_cvec(t0.size(), eng));
    y.push_back(random_cvec(t1.size(), eng));
  }

  const auto make_problem = [&](std::vector<CVec> data) {
    solver::ReconProblem p;
    p.op = solver::make_per_state_nufft_operator(grid, {t0, t1}, {w0, w1}, {flat});
    p.n_echoes = data.size() / 2;
    p.y = std::move(data);
    p.lambda = 2.0;  // tight dual ball so the projection clips
    p.coupling = reg::Coupling::l1;
    p.n_iters = 50;
    return p;
  };

  const auto [uj, trj] = solver::reconstruct(make_problem(y));
  int mismatched = 0;
  for (std::size_t k = 0; k < e; ++k) {
    const auto [us, trs] =
        solver::reconstruct(make_problem({y[2 * k], y[2 * k + 1]}));
    if (std::memcmp(us.echoes[0].data.data(), uj.echoes[k].data.data(),
                    uj.echoes[k].size() * sizeof(cdouble)) != 0)
      ++mismatched;
  }
  return {mismatched == 0,
          fmt("3-echo l1-coupled recon vs 3 single-echo recons: %d echoes differ "
              "(want 0, compared bitwise)",
              mismatched)};
}

// --- group 5: rgb misalignment experiment ------------------------------------

Outcome check_rgb(Context& ctx) {
  std::string detail;
  bool ok = true;
  for (const char* name : {"synth_rgb_radial.json", "synth_rgb_spiral.json"}) {
    const fs::path out = ctx.work / fs::path(name).stem();
    const auto c = load_shipped(name, out);
    const auto t0 = std::chrono::steady_clock::now();
    recon::exp::run_experiment(c);
    const double secs = seconds_since(t0);

    const auto em = csv_key_value(out / "edge_misalignment.csv", "method",
                                  "mean_edge_offset_voxels");
    const bool better = em.at("joint") < em.at("channelwise");
    const bool profiles = fs::exists(out / "profiles.csv") &&
                          fs::file_size(out / "profiles.csv") > 0;
    ok = ok && better && profiles && secs < 180.0;
    ctx.trace_files.push_back(out / "trace_joint.csv");
    ctx.trace_files.push_back(out / "trace_channelwise.csv");
    if (!detail.empty()) detail += "; ";
    detail += fmt("%s: joint %.3g vs channelwise %.3g voxels, profiles %s, %.0f s",
                  fs::path(name).stem().c_str(), em.at("joint"), em.at("channelwise"),
                  profiles ? "written" : "MISSING", secs);
  }
  return {ok, detail};
}

// --- group 6: moving vial phantom experiment ---------------------------------

Outcome check_phantom(Context& ctx) {
  const fs::path out = ctx.work / "phantom";
  const auto c = load_shipped("phantom.json", out);
  const auto t0 = std::chrono::steady_clock::now();
  recon::exp::run_experiment(c);
  const double secs = seconds_since(t0);
  ctx.trace_files.push_back(out / "trace_echo.csv");
  ctx.trace_files.push_back(out / "trace_joint.csv");

  const Csv roi = read_csv(out / "roi_r2star.csv");
  int joint_wins = 0;
  for (std::size_t v = 0; v < roi.rows.size(); ++v) {
    const double ref = roi.num(v, "gridding_mean");
    if (std::abs(roi.num(v, "joint_mean") - ref) <
        std::abs(roi.num(v, "echo_mean") - ref))
      ++joint_wins;
  }

  const auto bias = csv_key_value(out / "bland_altman_summary.csv", "arm", "bias");
  const bool bias_ok = std::abs(bias.at("joint")) <= std::abs(bias.at("echo"));

  const auto slope = csv_key_value(out / "regression.csv", "arm", "slope");
  const double want = c.phantom.relaxivity_r1;
  const double slope_err = std::abs(slope.at("gridding") - want) / want;

  const bool ok = joint_wins >= 6 && bias_ok && slope_err <= 0.10 && secs < 600.0;
  return {ok, fmt("joint closer to the motionless reference on %d/%zu vials "
                  "(need >= 6), |bias| joint %.3g vs echo %.3g%%, motionless slope "
                  "%.4g vs %.4g (err %.1f%%, limit 10%%), %.0f s (limit 600 s)",
                  joint_wins, roi.rows.size(), std::abs(bias.at("joint")),
                  std::abs(bias.at("echo")), slope.at("gridding"), want,
                  100.0 * slope_err, secs)};
}

// --- group 7: r2star fitting -------------------------------------------------

Outcome check_r2star() {
  const RVec te{0.5, 1.5, 3.0, 4.5, 6.0, 8.0};  // ms, six echoes
  const RVec rates{0.0, 15.0, 40.0, 90.0, 150.0, 250.0, 400.0};  // 1/s
  const double rho = 1.2;

  std::vector<RVec> mags(te.size(), RVec(rates.size()));
  for (std::size_t k = 0; k < te.size(); ++k)
    for (std::size_t v = 0; v < rates.size(); ++v)
      mags[k][v] = rho * std::exp(-rates[v] * te[k] * 1e-3);
  const auto map = quant::fit_r2star(mags, te);
  double exact_err = 0.0;
  for (std::size_t v = 0; v < rates.size(); ++v)
    exact_err = std::max(exact_err,
                         std::abs(map.r2star[v] - rates[v]) / (1.0 + rates[v]));

  // 1% noise on unit-amplitude magnitudes
  const double true_r = 100.0;
  const std::size_t voxels = 1000;
  std::mt19937_64 eng(707);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<RVec> noisy(te.size(), RVec(voxels));
  for (std::size_t k = 0; k < te.size(); ++k)
    for (std::size_t v = 0; v < voxels; ++v)
      noisy[k][v] = std::exp(-true_r * te[k] * 1e-3) + noise(eng);
  const auto noisy_map = quant::fit_r2star(noisy, te);
  RVec errs(voxels);
  for (std::size_t v = 0; v < voxels; ++v)
    errs[v] = std::abs(noisy_map.r2star[v] - true_r);
  std::nth_element(errs.begin(), errs.begin() + voxels / 2, errs.end());
  const double median_err = errs[voxels / 2];

  const bool ok = exact_err < 1e-9 && median_err < 3.0;
  return {ok, fmt("noiseless rel err %.3g (limit 1e-9), median abs err at 1%% "
                  "noise %.3g 1/s (limit 3)",
                  exact_err, median_err)};
}

// --- group 8: bitwise reproducibility ----------------------------------------

std::map<std::string, std::vector<char>> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::vector<char>> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).string();
    if (rel == "config_resolved.json") continue;  // records the thread count
    std::ifstream f(entry.path(), std::ios::binary);
    out[rel] = std::vector<char>(std::istreambuf_iterator<char>(f), {});
  }
  return out;
}

Outcome check_reproducibility(Context& ctx) {
  const struct {
    const char* tag;
    unsigned threads;
  } runs[] = {{"t1_a", 1}, {"t1_b", 1}, {"t2", 2}, {"tmax", 0}};

  std::vector<std::map<std::string, std::vector<char>>> results;
  for (const auto& r : runs) {
    const fs::path out = ctx.work / (std::string("repro_") + r.tag);
    auto c = load_shipped("synth_rgb_radial.json", out);
    recon::threads::set_num_threads(r.threads);
    recon::exp::run_experiment(c);
    results.push_back(dir_bytes(out));
  }
  recon::threads::set_num_threads(0);

  int mismatches = 0;
  std::string first_bad;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].size() != results[0].size()) ++mismatches;
    for (const auto& [rel, bytes] : results[0]) {
      const auto it = results[i].find(rel);
      if (it == results[i].end() || it->second != bytes) {
        ++mismatches;
        if (first_bad.empty()) first_bad = runs[i].tag + std::string(":") + rel;
      }
    }
  }
  return {mismatches == 0,
          fmt("%zu artifacts compared across a repeat run and thread counts "
              "1/2/max: %d mismatches%s%s",
              results[0].size(), mismatches, first_bad.empty() ? "" : ", first at ",
              first_bad.c_str())};
}

// --- group 9: monotone objective, finite traces -------------------------------

Outcome check_objective(const Context& ctx) {
  int traces = 0, bad = 0;
  std::string first_bad;
  const auto inspect = [&](const std::vector<solver::IterRecord>& recs,
                           const std::string& name) {
    ++traces;
    bool good = !recs.empty() && recs.front().iter == 1;
    for (const auto& r : recs)
      good = good && std::isfinite(r.objective) && std::isfinite(r.data_term) &&
             std::isfinite(r.tv_term) && std::isfinite(r.primal_change);
    good = good && recs.back().objective < recs.front().objective;
    if (!good) {
      ++bad;
      if (first_bad.empty()) first_bad = name;
    }
  };

  for (std::size_t i = 0; i < ctx.solver_traces.size(); ++i)
    inspect(ctx.solver_traces[i].records, fmt("solver trace %zu", i));

  for (const auto& path : ctx.trace_files) {
    const Csv t = read_csv(path);
    std::vector<solver::IterRecord> recs;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      solver::IterRecord r;
      r.iter = int(t.num(i, "iter"));
      r.objective = t.num(i, "objective");
      r.data_term = t.num(i, "data_term");
      r.tv_term = t.num(i, "tv_term");
      r.primal_change = t.num(i, "primal_change");
      recs.push_back(r);
    }
    inspect(recs, path.filename().string());
  }

  return {bad == 0 && traces >= 8,
          fmt("%d traces checked (first iteration above final objective, all "
              "entries finite): %d violations%s%s",
              traces, bad, first_bad.empty() ? "" : ", first in ",
              first_bad.c_str())};
}

}  // namespace

int main() {
  Context ctx;
  ctx.work = fs::temp_directory_path() / "recon_acceptance";
  fs::remove_all(ctx.work);
  fs::create_directories(ctx.work);

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, "gridding nufft matches the direct transform and its adjoint",
       [&] { return check_nufft(); }},
      {2, "temporal difference adjoint identity and dual ball projection",
       [&] { return check_operators(); }},
      {3, "pdhg agrees with independent denoising and least-squares oracles",
       [&] { return check_pdhg(ctx); }},
      {4, "uncoupled multi-echo recon equals single-echo recons bitwise",
       [&] { return check_uncoupled_equality(); }},
      {5, "joint recon reduces rgb edge misalignment on radial and spiral",
       [&] { return check_rgb(ctx); }},
      {6, "joint recon improves moving-phantom r2star accuracy",
       [&] { return check_phantom(ctx); }},
      {7, "r2star fit is exact without noise and robust at 1% noise",
       [&] { return check_r2star(); }},
      {8, "artifacts are bitwise reproducible across runs and thread counts",
       [&] { return check_reproducibility(ctx); }},
      {9, "pdhg objective decreases from first to final iteration",
       [&] { return check_objective(ctx); }},
  };

  int failures = 0;
  for (const auto& e : entries) {
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    if (!o.ok) ++failures;
    std::printf("[%s] criterion %d: %s (%s)\n", o.ok ? "PASS" : "FAIL", e.id, e.name,
                o.detail.c_str());
    std::fflush(stdout);
  }

  fs::remove_all(ctx.work);
  return failures == 0 ? 0 : 1;
}
