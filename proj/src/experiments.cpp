#include "recon/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "recon/errors.hpp"
#include "recon/io.hpp"
#include "recon/kernels.hpp"
#include "recon/nufft.hpp"
#include "recon/quantify.hpp"
#include "recon/regularization.hpp"

namespace fs = std::filesystem;

namespace recon::exp {

namespace {

// relative-path bookkeeping for the manifest
struct Artifacts {
  std::string dir;
  std::vector<std::string> rel;

  explicit Artifacts(const std::string& out_dir) : dir(out_dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
  }
  std::string path(const std::string& rel_path) {
    rel.push_back(rel_path);
    return dir + "/" + rel_path;
  }
  // for provenance echoes that must not affect the manifest (the resolved
  // config records run-only knobs like the thread count)
  std::string unlisted_path(const std::string& rel_path) const { return dir + "/" + rel_path; }
  void image(const RVec& img, Grid2 g, const std::string& base) {
    io::export_image(img, g, dir + "/" + base, io::Normalization::percentile99);
    rel.push_back(base + ".png");
    rel.push_back(base + ".raw");
    rel.push_back(base + ".json");
  }
  std::vector<std::string> finish() {
    io::write_manifest(dir, rel);
    return rel;
  }
};

std::string fmt(const char* pattern, int a, int b = -1) {
  char buf[96];
  if (b < 0)
    std::snprintf(buf, sizeof buf, pattern, a);
  else
    std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

CVec to_cvec(const RVec& r) {
  CVec out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = cdouble{r[i], 0.0};
  return out;
}

RVec state_magnitude(const MotionResolvedImage& u, int t) {
  RVec out(u.n_voxels);
  const cdouble* s = u.state(t);
  for (std::size_t i = 0; i < u.n_voxels; ++i) out[i] = std::abs(s[i]);
  return out;
}

CVec state_slice(const MotionResolvedImage& u, int t) {
  return CVec(u.state(t), u.state(t) + u.n_voxels);
}

RVec iota(std::size_t n) {
  RVec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = double(i);
  return out;
}

}  // namespace

RVec magnitude(const CVec& v) {
  RVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
  return out;
}

CVec gridding_recon(const Grid2& grid, const CVec& samples, const traj::Trajectory& trajectory,
                    const traj::DensityWeights& weights) {
  if (samples.size() != trajectory.size() || weights.w.size() != trajectory.size())
    throw ArgumentError("samples/weights do not match trajectory");
  CVec weighted = samples;
  kernels::mul_real(weighted.size(), weights.w.data(), weighted.data());
  const nufft::NufftPlan plan = nufft::plan_nufft(grid);
  return nufft::nufft_adjoint(plan, weighted, trajectory);
}

std::pair<EchoStack, solver::SolverTrace> reconstruct_bundle(const sim::KSpaceBundle& bundle,
                                                             const cfg::SolverConfig& scfg,
                                                             int dcf_iterations) {
  bundle.validate();
  std::vector<traj::DensityWeights> weights(bundle.n_states);
  for (int t = 0; t < bundle.n_states; ++t)
    weights[t] =
        traj::compute_density_weights(bundle.state_traj[t], dcf_iterations, bundle.grid.nx);

  solver::ReconProblem p;
  p.op = solver::make_per_state_nufft_operator(bundle.grid, bundle.state_traj, weights,
                                               sim::gen_coil_maps(bundle.n_coils, bundle.grid));
  p.n_echoes = std::size_t(bundle.n_echoes());
  p.lambda = scfg.lambda;
  p.sigma = scfg.sigma;
  p.tau = scfg.tau;
  p.n_iters = scfg.iterations;
  p.coupling = cfg::parse_coupling(scfg.coupling);
  p.y.resize(bundle.samples.size());
  for (int k = 0; k < bundle.n_echoes(); ++k)
    for (int j = 0; j < bundle.n_coils; ++j)
      for (int t = 0; t < bundle.n_states; ++t) {
        const std::size_t idx = bundle.sample_index(k, j, t);
        p.y[p.y_index(k, j, t)] = p.op->weight_data(bundle.samples[idx], t);
      }
  return solver::reconstruct(p);
}

std::vector<std::string> cmd_synth_rgb(const cfg::ExperimentConfig& c) {
  Artifacts art(c.out_dir);
  cfg::write_resolved(c, art.unlisted_path("config_resolved.json"));

  const Grid2 grid{c.matrix, c.matrix};
  const sim::RgbPhantom truth =
      sim::shift_channels(sim::make_rgb_phantom(grid), c.rgb.g_shift, c.rgb.b_shift);
  io::export_rgb_png(truth.r, truth.g, truth.b, grid, art.path("input_rgb.png"));

  const traj::Trajectory trajectory = cfg::make_trajectory(c);
  const traj::DensityWeights dcf =
      traj::compute_density_weights(trajectory, c.trajectory.dcf_iterations, c.matrix);
  const nufft::NufftPlan plan = nufft::plan_nufft(grid);

  std::vector<CVec> y(3);
  for (int ch = 0; ch < 3; ++ch) {
    y[ch] = nufft::nufft_forward(plan, to_cvec(truth.channel(ch)), trajectory);
    sim::add_noise(y[ch], trajectory, c.rgb.noise_std, c.seed, std::uint64_t(ch));
  }

  const char* names[3] = {"r", "g", "b"};
  std::vector<RVec> grid_mag(3);
  for (int ch = 0; ch < 3; ++ch) {
    grid_mag[ch] = magnitude(gridding_recon(grid, y[ch], trajectory, dcf));
    art.image(grid_mag[ch], grid, std::string("gridding_") + names[ch]);
  }
  io::export_rgb_png(grid_mag[0], grid_mag[1], grid_mag[2], grid, art.path("gridding_rgb.png"));

  // channels ride the echo axis; the vertical image axis is the solver's
  // difference axis, so one problem serves both couplings
  solver::ReconProblem p;
  p.op = solver::make_planar_nufft_operator(grid, trajectory, dcf);
  p.n_echoes = 3;
  p.lambda = c.solver.lambda;
  p.sigma = c.solver.sigma;
  p.tau = c.solver.tau;
  p.n_iters = c.solver.iterations;
  p.y.resize(3);
  for (int ch = 0; ch < 3; ++ch) p.y[ch] = p.op->weight_data(y[ch], 0);

  p.coupling = reg::Coupling::l2;
  auto [stack_joint, trace_joint] = solver::reconstruct(p);
  p.coupling = reg::Coupling::l1;
  auto [stack_chan, trace_chan] = solver::reconstruct(p);
  solver::write_trace_csv(trace_joint, art.path("trace_joint.csv"));
  solver::write_trace_csv(trace_chan, art.path("trace_channelwise.csv"));

  std::vector<RVec> joint_mag(3), chan_mag(3);
  for (int ch = 0; ch < 3; ++ch) {
    joint_mag[ch] = magnitude(stack_joint.echoes[ch].data);
    chan_mag[ch] = magnitude(stack_chan.echoes[ch].data);
    art.image(joint_mag[ch], grid, std::string("joint_") + names[ch]);
    art.image(chan_mag[ch], grid, std::string("channelwise_") + names[ch]);
  }
  io::export_rgb_png(joint_mag[0], joint_mag[1], joint_mag[2], grid, art.path("joint_rgb.png"));
  io::export_rgb_png(chan_mag[0], chan_mag[1], chan_mag[2], grid,
                     art.path("channelwise_rgb.png"));

  const int col = c.rgb.profile_column;
  std::vector<std::pair<std::string, RVec>> series;
  for (int ch = 0; ch < 3; ++ch)
    series.emplace_back(std::string("input_") + names[ch],
                        quant::vertical_profile(truth.channel(ch), grid, col));
  for (int ch = 0; ch < 3; ++ch)
    series.emplace_back(std::string("gridding_") + names[ch],
                        quant::vertical_profile(grid_mag[ch], grid, col));
  for (int ch = 0; ch < 3; ++ch)
    series.emplace_back(std::string("channelwise_") + names[ch],
                        quant::vertical_profile(chan_mag[ch], grid, col));
  for (int ch = 0; ch < 3; ++ch)
    series.emplace_back(std::string("joint_") + names[ch],
                        quant::vertical_profile(joint_mag[ch], grid, col));
  io::write_profile_csv(art.path("profiles.csv"), "row", iota(std::size_t(grid.ny)), series);

  const std::vector<RVec> truth_ch = {truth.r, truth.g, truth.b};
  std::ofstream em(art.path("edge_misalignment.csv"), std::ios::binary);
  if (!em) throw IoError("cannot open edge_misalignment.csv");
  em << "method,mean_edge_offset_voxels\n";
  char line[96];
  const auto emit = [&](const char* name, double v) {
    std::snprintf(line, sizeof line, "%s,%.17g\n", name, v);
    em << line;
  };
  emit("input", quant::edge_misalignment(truth_ch, grid));
  emit("gridding", quant::edge_misalignment(grid_mag, grid));
  emit("channelwise", quant::edge_misalignment(chan_mag, grid));
  emit("joint", quant::edge_misalignment(joint_mag, grid));
  em.close();
  if (!em) throw IoError("write failed: edge_misalignment.csv");

  return art.finish();
}

namespace {

// matched-filter coil combination; the maps satisfy sum_j |S_j|^2 = 1
CVec combine_coils(const std::vector<CVec>& coil_imgs, const std::vector<CVec>& maps) {
  CVec out(coil_imgs[0].size(), cdouble{0.0, 0.0});
  for (std::size_t j = 0; j < coil_imgs.size(); ++j) {
    CVec tmp = coil_imgs[j];
    kernels::cmul_conj(tmp.size(), maps[j].data(), tmp.data());
    kernels::axpy_real(tmp.size(), 1.0, tmp.data(), out.data());
  }
  return out;
}

struct ArmResult {
  std::vector<RVec> echo_mag;  // per echo, end-expiration state for solver arms
  quant::R2StarMap r2;
};

}  // namespace

std::vector<std::string> cmd_phantom(const cfg::ExperimentConfig& c) {
  Artifacts art(c.out_dir);
  cfg::write_resolved(c, art.unlisted_path("config_resolved.json"));

  const Grid2 grid{c.matrix, c.matrix};
  const auto& pc = c.phantom;
  const sim::VialPhantom phantom = sim::make_vial_phantom(
      grid, pc.n_vials, pc.conc_min_mm, pc.conc_max_mm, pc.relaxivity_r0, pc.relaxivity_r1);
  const std::vector<CVec> coil_maps = sim::gen_coil_maps(pc.n_coils, grid);
  const traj::Trajectory acq = cfg::make_acquisition_trajectory(c);
  const int e = int(pc.te_ms.size());

  // arm (a): no table motion, density-compensated adjoint of the full stream
  sim::MotionModel none;
  auto [stream_a, resp_a] =
      sim::simulate_multiecho_kspace(phantom, acq, coil_maps, pc.te_ms, none, pc.noise_std,
                                     c.seed);
  const traj::DensityWeights dcf_full =
      traj::compute_density_weights(acq, c.trajectory.dcf_iterations, c.matrix);
  ArmResult arm_a;
  for (int k = 0; k < e; ++k) {
    std::vector<CVec> coil_imgs(pc.n_coils);
    for (int j = 0; j < pc.n_coils; ++j)
      coil_imgs[j] = gridding_recon(grid, stream_a.samples[std::size_t(k) * pc.n_coils + j],
                                    acq, dcf_full);
    arm_a.echo_mag.push_back(magnitude(combine_coils(coil_imgs, coil_maps)));
    art.image(arm_a.echo_mag.back(), grid, fmt("gridding_e%02d", k));
  }

  // arms (b), (c): periodic table motion, binned into n_states
  const sim::MotionModel motion = cfg::to_motion_model(pc.motion);
  auto [stream_m, resp_m] =
      sim::simulate_multiecho_kspace(phantom, acq, coil_maps, pc.te_ms, motion, pc.noise_std,
                                     c.seed);
  const sim::KSpaceBundle bundle = sim::bin_kspace(stream_m, resp_m, pc.n_states);
  if (pc.save_bundle) {
    sim::save_bundle(bundle, c.out_dir + "/bundle");
    art.rel.push_back("bundle/meta.json");
    art.rel.push_back("bundle/resp.csv");
    for (int t = 0; t < bundle.n_states; ++t)
      art.rel.push_back(fmt("bundle/traj_state%03d.bin", t));
    for (int k = 0; k < e; ++k)
      for (int j = 0; j < pc.n_coils; ++j)
        for (int t = 0; t < bundle.n_states; ++t) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "bundle/samples_e%02d_c%02d_s%03d.bin", k, j, t);
          art.rel.push_back(buf);
        }
  }

  cfg::SolverConfig echo_cfg = c.solver;
  echo_cfg.coupling = "l1";
  cfg::SolverConfig joint_cfg = c.solver;
  joint_cfg.coupling = "l2";
  auto [stack_b, trace_b] = reconstruct_bundle(bundle, echo_cfg, c.trajectory.dcf_iterations);
  auto [stack_c, trace_c] = reconstruct_bundle(bundle, joint_cfg, c.trajectory.dcf_iterations);
  solver::write_trace_csv(trace_b, art.path("trace_echo.csv"));
  solver::write_trace_csv(trace_c, art.path("trace_joint.csv"));

  ArmResult arm_b, arm_c;
  for (int k = 0; k < e; ++k) {
    arm_b.echo_mag.push_back(state_magnitude(stack_b.echoes[k], 0));
    arm_c.echo_mag.push_back(state_magnitude(stack_c.echoes[k], 0));
    art.image(arm_b.echo_mag.back(), grid, fmt("recon_echo_e%02d_s000", k));
    art.image(arm_c.echo_mag.back(), grid, fmt("recon_joint_e%02d_s000", k));
  }
  for (int t = 1; t < pc.n_states; ++t)
    art.image(state_magnitude(stack_c.echoes[0], t), grid, fmt("recon_joint_e00_s%03d", t));

  arm_a.r2 = quant::fit_r2star(arm_a.echo_mag, pc.te_ms);
  arm_b.r2 = quant::fit_r2star(arm_b.echo_mag, pc.te_ms);
  arm_c.r2 = quant::fit_r2star(arm_c.echo_mag, pc.te_ms);
  art.image(arm_a.r2.r2star, grid, "r2star_gridding");
  art.image(arm_b.r2.r2star, grid, "r2star_echo");
  art.image(arm_c.r2.r2star, grid, "r2star_joint");

  std::vector<CVec> echoes_a(e), echoes_b(e), echoes_c(e);
  for (int k = 0; k < e; ++k) {
    echoes_a[k] = to_cvec(arm_a.echo_mag[k]);
    echoes_b[k] = state_slice(stack_b.echoes[k], 0);
    echoes_c[k] = state_slice(stack_c.echoes[k], 0);
  }
  art.image(quant::rss_combine(echoes_a), grid, "t2sw_gridding");
  art.image(quant::rss_combine(echoes_b), grid, "t2sw_echo");
  art.image(quant::rss_combine(echoes_c), grid, "t2sw_joint");

  // per-vial ROI statistics on the R2* maps
  std::vector<quant::RoiReport> roi_a, roi_b, roi_c;
  for (const auto& v : phantom.vials) {
    quant::Roi roi;
    roi.cx = int(std::lround(v.cx)) + grid.nx / 2;
    roi.cy = int(std::lround(v.cy)) + grid.ny / 2;
    roi.radius = pc.roi_radius;
    roi_a.push_back(quant::roi_stats(arm_a.r2.r2star, grid, roi));
    roi_b.push_back(quant::roi_stats(arm_b.r2.r2star, grid, roi));
    roi_c.push_back(quant::roi_stats(arm_c.r2.r2star, grid, roi));
  }

  {
    std::vector<RVec> rows;
    for (std::size_t v = 0; v < phantom.vials.size(); ++v)
      rows.push_back({double(v), phantom.vials[v].concentration_mM, phantom.vials[v].r2star,
                      roi_a[v].mean, roi_a[v].stddev, roi_b[v].mean, roi_b[v].stddev,
                      roi_c[v].mean, roi_c[v].stddev});
    io::write_table_csv(art.path("roi_r2star.csv"),
                        {"vial", "concentration_mm", "true_r2star", "gridding_mean",
                         "gridding_std", "echo_mean", "echo_std", "joint_mean", "joint_std"},
                        rows);
  }

  const auto regression_points = [&](const std::vector<quant::RoiReport>& roi) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t v = 0; v < phantom.vials.size(); ++v)
      pts.emplace_back(phantom.vials[v].concentration_mM, roi[v].mean);
    return pts;
  };
  const quant::Regression reg_a = quant::concentration_regression(regression_points(roi_a));
  const quant::Regression reg_b = quant::concentration_regression(regression_points(roi_b));
  const quant::Regression reg_c = quant::concentration_regression(regression_points(roi_c));
  {
    std::ofstream out(art.path("regression.csv"), std::ios::binary);
    if (!out) throw IoError("cannot open regression.csv");
    out << "arm,slope,intercept,r2\n";
    char line[160];
    const auto emit = [&](const char* arm, const quant::Regression& r) {
      std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g\n", arm, r.slope, r.intercept,
                    r.r2);
      out << line;
    };
    emit("gridding", reg_a);
    emit("echo", reg_b);
    emit("joint", reg_c);
    if (!out) throw IoError("write failed: regression.csv");
  }

  RVec means_a, means_b, means_c;
  for (std::size_t v = 0; v < phantom.vials.size(); ++v) {
    means_a.push_back(roi_a[v].mean);
    means_b.push_back(roi_b[v].mean);
    means_c.push_back(roi_c[v].mean);
  }
  const quant::BlandAltman ba_echo = quant::bland_altman(means_b, means_a);
  const quant::BlandAltman ba_joint = quant::bland_altman(means_c, means_a);
  {
    std::ofstream out(art.path("bland_altman.csv"), std::ios::binary);
    if (!out) throw IoError("cannot open bland_altman.csv");
    out << "arm,vial,concentration_mm,percent_diff\n";
    char line[120];
    for (std::size_t v = 0; v < phantom.vials.size(); ++v) {
      std::snprintf(line, sizeof line, "echo,%zu,%.17g,%.17g\n", v,
                    phantom.vials[v].concentration_mM, ba_echo.percent_diff[v]);
      out << line;
    }
    for (std::size_t v = 0; v < phantom.vials.size(); ++v) {
      std::snprintf(line, sizeof line, "joint,%zu,%.17g,%.17g\n", v,
                    phantom.vials[v].concentration_mM, ba_joint.percent_diff[v]);
      out << line;
    }
    if (!out) throw IoError("write failed: bland_altman.csv");
  }
  {
    std::ofstream out(art.path("bland_altman_summary.csv"), std::ios::binary);
    if (!out) throw IoError("cannot open bland_altman_summary.csv");
    out << "arm,bias,lo,hi\n";
    char line[160];
    std::snprintf(line, sizeof line, "echo,%.17g,%.17g,%.17g\n", ba_echo.bias, ba_echo.lo,
                  ba_echo.hi);
    out << line;
    std::snprintf(line, sizeof line, "joint,%.17g,%.17g,%.17g\n", ba_joint.bias, ba_joint.lo,
                  ba_joint.hi);
    out << line;
    if (!out) throw IoError("write failed: bland_altman_summary.csv");
  }

  return art.finish();
}

std::vector<std::string> cmd_recon(const cfg::ExperimentConfig& c) {
  const sim::KSpaceBundle bundle = sim::load_bundle(c.recon.bundle_dir);
  Artifacts art(c.out_dir);
  cfg::write_resolved(c, art.unlisted_path("config_resolved.json"));

  auto [stack, trace] = reconstruct_bundle(bundle, c.solver, c.trajectory.dcf_iterations);
  solver::write_trace_csv(trace, art.path("trace.csv"));

  const Grid2 grid = bundle.grid;
  for (int k = 0; k < bundle.n_echoes(); ++k)
    for (int t = 0; t < bundle.n_states; ++t)
      art.image(state_magnitude(stack.echoes[k], t), grid, fmt("recon_e%02d_s%03d", k, t));

  for (int t = 0; t < bundle.n_states; ++t) {
    std::vector<CVec> echoes(bundle.n_echoes());
    for (int k = 0; k < bundle.n_echoes(); ++k) echoes[k] = state_slice(stack.echoes[k], t);
    const RVec t2sw = quant::rss_combine(echoes);
    art.image(t2sw, grid, fmt("t2sw_s%03d", t));
    art.image(quant::gradient_magnitude(t2sw, grid), grid, fmt("gradmag_s%03d", t));
  }

  return art.finish();
}

std::vector<std::string> cmd_r2star(const cfg::ExperimentConfig& c) {
  std::vector<RVec> mags;
  Grid2 grid{0, 0};
  for (const auto& base : c.r2star.echo_paths) {
    auto [img, g] = io::read_raw_image(base);
    if (!mags.empty() && !(g == grid))
      throw ArgumentError("echo images have differing dimensions");
    grid = g;
    mags.push_back(std::move(img));
  }
  const quant::R2StarMap map = quant::fit_r2star(mags, c.r2star.te_ms);

  Artifacts art(c.out_dir);
  cfg::write_resolved(c, art.unlisted_path("config_resolved.json"));
  art.image(map.r2star, grid, "r2star");
  art.image(map.rho, grid, "rho");
  RVec mask(map.mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = double(map.mask[i]);
  art.image(mask, grid, "mask");
  return art.finish();
}

std::vector<std::string> cmd_traj(const cfg::ExperimentConfig& c) {
  Artifacts art(c.out_dir);
  cfg::write_resolved(c, art.unlisted_path("config_resolved.json"));

  const traj::Trajectory t = cfg::make_trajectory(c);
  traj::write_csv(t, art.path("trajectory.csv"));
  traj::write_binary(t, art.path("trajectory.bin"));

  const traj::DensityWeights dcf =
      traj::compute_density_weights(t, c.trajectory.dcf_iterations, c.matrix);
  {
    std::vector<RVec> rows;
    rows.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      rows.push_back({double(i), t.kx[i], t.ky[i], double(t.readout[i]), dcf.w[i]});
    io::write_table_csv(art.path("density_weights.csv"),
                        {"index", "kx", "ky", "readout", "weight"}, rows);
  }
  {
    const std::vector<double> res = traj::density_residual(t, dcf);
    double lo = res[0], hi = res[0], sum = 0.0, sq = 0.0;
    for (const double v : res) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      sq += (v - 1.0) * (v - 1.0);
    }
    std::vector<RVec> rows = {{double(t.size()), double(t.num_readouts()), lo, hi,
                               sum / double(res.size()), std::sqrt(sq / double(res.size()))}};
    io::write_table_csv(art.path("dcf_report.csv"),
                        {"samples", "readouts", "residual_min", "residual_max", "residual_mean",
                         "residual_rms_error"},
                        rows);
  }
  return art.finish();
}

std::vector<std::string> run_experiment(const cfg::ExperimentConfig& c) {
  switch (c.kind) {
    case cfg::Experiment::synth_rgb: return cmd_synth_rgb(c);
    case cfg::Experiment::phantom: return cmd_phantom(c);
    case cfg::Experiment::recon: return cmd_recon(c);
    case cfg::Experiment::r2star: return cmd_r2star(c);
    case cfg::Experiment::traj: return cmd_traj(c);
  }
  throw ArgumentError("unknown experiment");
}

}  // namespace recon::exp
