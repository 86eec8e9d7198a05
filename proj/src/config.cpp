#include "recon/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "recon/errors.hpp"

using json = nlohmann::ordered_json;

namespace recon::cfg {

Experiment parse_experiment(const std::string& s) {
  if (s == "synth_rgb") return Experiment::synth_rgb;
  if (s == "phantom") return Experiment::phantom;
  if (s == "recon") return Experiment::recon;
  if (s == "r2star") return Experiment::r2star;
  if (s == "traj") return Experiment::traj;
  throw ArgumentError("unknown experiment kind: " + s);
}

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::synth_rgb: return "synth_rgb";
    case Experiment::phantom: return "phantom";
    case Experiment::recon: return "recon";
    case Experiment::r2star: return "r2star";
    case Experiment::traj: return "traj";
  }
  return "unknown";
}

reg::Coupling parse_coupling(const std::string& s) {
  if (s == "l2") return reg::Coupling::l2;
  if (s == "l1") return reg::Coupling::l1;
  throw ArgumentError("unknown coupling: " + s + " (expected l2 or l1)");
}

traj::AngleScheme parse_angle_scheme(const std::string& s) {
  if (s == "uniform") return traj::AngleScheme::uniform;
  if (s == "golden") return traj::AngleScheme::golden;
  throw ArgumentError("unknown angle scheme: " + s + " (expected uniform or golden)");
}

sim::MotionModel to_motion_model(const MotionConfig& m) {
  sim::MotionModel model;
  if (m.kind == "none")
    model.kind = sim::MotionKind::none;
  else if (m.kind == "periodic_translation")
    model.kind = sim::MotionKind::periodic_translation;
  else
    throw ArgumentError("unknown motion kind: " + m.kind);
  model.amplitude_voxels = m.amplitude_voxels;
  model.period_s = m.period_s;
  model.phase_rad = m.phase_rad;
  model.validate();
  return model;
}

namespace {

void resolve(ExperimentConfig& c) {
  if (c.trajectory.spokes == 0 && c.trajectory.acceleration > 0.0)
    c.trajectory.spokes = traj::nyquist_spokes(c.matrix, c.trajectory.acceleration);
  if (c.trajectory.samples_per_spoke == 0) c.trajectory.samples_per_spoke = 2 * c.matrix;
  if (c.rgb.profile_column < 0) c.rgb.profile_column = c.matrix / 2;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (out_dir.empty()) throw ArgumentError("out_dir must not be empty");
  if (matrix < 16) throw ArgumentError("matrix must be >= 16");

  if (trajectory.kind != "radial" && trajectory.kind != "spiral")
    throw ArgumentError("trajectory kind must be radial or spiral");
  parse_angle_scheme(trajectory.angle_scheme);
  if (trajectory.spokes < 1) throw ArgumentError("trajectory needs at least one spoke");
  if (trajectory.samples_per_spoke < 2) throw ArgumentError("need >= 2 samples per spoke");
  if (trajectory.interleaves < 1) throw ArgumentError("need at least one interleave");
  if (!(trajectory.fov_cm > 0.0) || !(trajectory.res_mm > 0.0))
    throw ArgumentError("fov_cm and res_mm must be positive");
  if (!(trajectory.density_exponent >= 1.0)) throw ArgumentError("density_exponent must be >= 1");
  if (trajectory.dcf_iterations < 1) throw ArgumentError("dcf_iterations must be >= 1");

  if (!(solver.lambda > 0.0)) throw ArgumentError("lambda must be positive");
  if (!(solver.sigma > 0.0) || !(solver.tau > 0.0))
    throw ArgumentError("sigma and tau must be positive");
  if (solver.iterations < 1) throw ArgumentError("iterations must be >= 1");
  parse_coupling(solver.coupling);

  switch (kind) {
    case Experiment::synth_rgb: {
      const int limit = matrix / 4;
      if (std::abs(rgb.g_shift) >= limit || std::abs(rgb.b_shift) >= limit)
        throw ArgumentError("channel shift must stay below a quarter of the grid");
      if (rgb.noise_std < 0.0) throw ArgumentError("noise_std must be >= 0");
      if (rgb.profile_column >= matrix) throw ArgumentError("profile column out of range");
      break;
    }
    case Experiment::phantom: {
      if (phantom.n_vials < 1) throw ArgumentError("need at least one vial");
      if (!(phantom.conc_min_mm > 0.0) || phantom.conc_max_mm < phantom.conc_min_mm)
        throw ArgumentError("concentration range must be positive and ordered");
      if (phantom.n_coils < 1) throw ArgumentError("need at least one coil");
      if (phantom.n_states < 1) throw ArgumentError("need at least one motion state");
      if (phantom.te_ms.size() < 2) throw ArgumentError("phantom needs >= 2 echo times");
      for (std::size_t k = 1; k < phantom.te_ms.size(); ++k)
        if (!(phantom.te_ms[k] > phantom.te_ms[k - 1]))
          throw ArgumentError("echo times must be strictly increasing");
      if (phantom.readouts < phantom.n_states)
        throw ArgumentError("need at least one readout per motion state");
      if (phantom.noise_std < 0.0) throw ArgumentError("noise_std must be >= 0");
      if (!(phantom.roi_radius >= 1.0)) throw ArgumentError("roi_radius must be >= 1");
      to_motion_model(phantom.motion);
      break;
    }
    case Experiment::recon:
      if (recon.bundle_dir.empty()) throw ArgumentError("recon needs bundle_dir");
      break;
    case Experiment::r2star: {
      if (r2star.echo_paths.size() < 2) throw ArgumentError("r2star needs >= 2 echo images");
      if (r2star.te_ms.size() != r2star.echo_paths.size())
        throw ArgumentError("te_ms must match echo image count");
      for (std::size_t k = 1; k < r2star.te_ms.size(); ++k)
        if (!(r2star.te_ms[k] > r2star.te_ms[k - 1]))
          throw ArgumentError("echo times must be strictly increasing");
      break;
    }
    case Experiment::traj:
      break;
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError(origin + ": " + e.what());
  }
  ExperimentConfig c;
  try {
    c.kind = parse_experiment(j.at("experiment").get<std::string>());
    c.out_dir = field<std::string>(j, "out_dir", c.out_dir);
    c.seed = field<std::uint64_t>(j, "seed", c.seed);
    c.threads = field<unsigned>(j, "threads", c.threads);
    if (j.contains("grid")) c.matrix = field<int>(j.at("grid"), "matrix", c.matrix);

    if (j.contains("trajectory")) {
      const json& t = j.at("trajectory");
      auto& tc = c.trajectory;
      tc.kind = field<std::string>(t, "kind", tc.kind);
      tc.acceleration = field<double>(t, "acceleration", tc.acceleration);
      tc.spokes = field<int>(t, "spokes", tc.spokes);
      tc.samples_per_spoke = field<int>(t, "samples_per_spoke", tc.samples_per_spoke);
      tc.angle_scheme = field<std::string>(t, "angle_scheme", tc.angle_scheme);
      tc.interleaves = field<int>(t, "interleaves", tc.interleaves);
      tc.fov_cm = field<double>(t, "fov_cm", tc.fov_cm);
      tc.res_mm = field<double>(t, "res_mm", tc.res_mm);
      tc.density_exponent = field<double>(t, "density_exponent", tc.density_exponent);
      tc.dcf_iterations = field<int>(t, "dcf_iterations", tc.dcf_iterations);
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      auto& sc = c.solver;
      sc.lambda = field<double>(s, "lambda", sc.lambda);
      sc.sigma = field<double>(s, "sigma", sc.sigma);
      sc.tau = field<double>(s, "tau", sc.tau);
      sc.iterations = field<int>(s, "iterations", sc.iterations);
      sc.coupling = field<std::string>(s, "coupling", sc.coupling);
    }
    if (j.contains("rgb")) {
      const json& r = j.at("rgb");
      auto& rc = c.rgb;
      rc.g_shift = field<int>(r, "g_shift", rc.g_shift);
      rc.b_shift = field<int>(r, "b_shift", rc.b_shift);
      rc.noise_std = field<double>(r, "noise_std", rc.noise_std);
      rc.profile_column = field<int>(r, "profile_column", rc.profile_column);
    }
    if (j.contains("phantom")) {
      const json& p = j.at("phantom");
      auto& pc = c.phantom;
      pc.n_vials = field<int>(p, "n_vials", pc.n_vials);
      pc.conc_min_mm = field<double>(p, "conc_min_mm", pc.conc_min_mm);
      pc.conc_max_mm = field<double>(p, "conc_max_mm", pc.conc_max_mm);
      pc.relaxivity_r0 = field<double>(p, "relaxivity_r0", pc.relaxivity_r0);
      pc.relaxivity_r1 = field<double>(p, "relaxivity_r1", pc.relaxivity_r1);
      pc.n_coils = field<int>(p, "n_coils", pc.n_coils);
      pc.n_states = field<int>(p, "n_states", pc.n_states);
      pc.te_ms = field<RVec>(p, "te_ms", pc.te_ms);
      pc.readouts = field<int>(p, "readouts", pc.readouts);
      pc.noise_std = field<double>(p, "noise_std", pc.noise_std);
      pc.roi_radius = field<double>(p, "roi_radius", pc.roi_radius);
      pc.save_bundle = field<bool>(p, "save_bundle", pc.save_bundle);
      if (p.contains("motion")) {
        const json& m = p.at("motion");
        auto& mc = pc.motion;
        mc.kind = field<std::string>(m, "kind", mc.kind);
        mc.amplitude_voxels = field<double>(m, "amplitude_voxels", mc.amplitude_voxels);
        mc.period_s = field<double>(m, "period_s", mc.period_s);
        mc.phase_rad = field<double>(m, "phase_rad", mc.phase_rad);
      }
    }
    if (j.contains("recon")) {
      c.recon.bundle_dir = field<std::string>(j.at("recon"), "bundle_dir", c.recon.bundle_dir);
    }
    if (j.contains("r2star")) {
      const json& r = j.at("r2star");
      c.r2star.echo_paths =
          field<std::vector<std::string>>(r, "echo_paths", c.r2star.echo_paths);
      c.r2star.te_ms = field<RVec>(r, "te_ms", c.r2star.te_ms);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(origin + ": " + e.what());
  }
  resolve(c);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const ExperimentConfig& c) {
  json j;
  j["experiment"] = experiment_name(c.kind);
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["grid"] = {{"matrix", c.matrix}};
  j["trajectory"] = {{"kind", c.trajectory.kind},
                     {"acceleration", c.trajectory.acceleration},
                     {"spokes", c.trajectory.spokes},
                     {"samples_per_spoke", c.trajectory.samples_per_spoke},
                     {"angle_scheme", c.trajectory.angle_scheme},
                     {"interleaves", c.trajectory.interleaves},
                     {"fov_cm", c.trajectory.fov_cm},
                     {"res_mm", c.trajectory.res_mm},
                     {"density_exponent", c.trajectory.density_exponent},
                     {"dcf_iterations", c.trajectory.dcf_iterations}};
  j["solver"] = {{"lambda", c.solver.lambda},
                 {"sigma", c.solver.sigma},
                 {"tau", c.solver.tau},
                 {"iterations", c.solver.iterations},
                 {"coupling", c.solver.coupling}};
  j["rgb"] = {{"g_shift", c.rgb.g_shift},
              {"b_shift", c.rgb.b_shift},
              {"noise_std", c.rgb.noise_std},
              {"profile_column", c.rgb.profile_column}};
  j["phantom"] = {{"n_vials", c.phantom.n_vials},
                  {"conc_min_mm", c.phantom.conc_min_mm},
                  {"conc_max_mm", c.phantom.conc_max_mm},
                  {"relaxivity_r0", c.phantom.relaxivity_r0},
                  {"relaxivity_r1", c.phantom.relaxivity_r1},
                  {"n_coils", c.phantom.n_coils},
                  {"n_states", c.phantom.n_states},
                  {"te_ms", c.phantom.te_ms},
                  {"readouts", c.phantom.readouts},
                  {"noise_std", c.phantom.noise_std},
                  {"roi_radius", c.phantom.roi_radius},
                  {"save_bundle", c.phantom.save_bundle},
                  {"motion",
                   {{"kind", c.phantom.motion.kind},
                    {"amplitude_voxels", c.phantom.motion.amplitude_voxels},
                    {"period_s", c.phantom.motion.period_s},
                    {"phase_rad", c.phantom.motion.phase_rad}}}};
  j["recon"] = {{"bundle_dir", c.recon.bundle_dir}};
  j["r2star"] = {{"echo_paths", c.r2star.echo_paths}, {"te_ms", c.r2star.te_ms}};
  return j.dump(2) + "\n";
}

void write_resolved(const ExperimentConfig& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << dump_config(c);
  if (!out) throw IoError("write failed: " + path);
}

namespace {

// Acquire an evenly spaced subset of the designed interleaves; this is how a
// multi-shot spiral is actually accelerated (the per-shot waveform is fixed
// by the full design). Readouts are renumbered densely.
traj::Trajectory take_readouts(const traj::Trajectory& full, int n_design, int n_acq) {
  std::vector<char> keep(n_design, 0);
  std::vector<int> renumber(n_design, -1);
  for (int i = 0; i < n_acq; ++i) {
    const int id = int(std::llround(double(i) * n_design / n_acq));
    keep[std::min(id, n_design - 1)] = 1;
  }
  int next = 0;
  for (int i = 0; i < n_design; ++i)
    if (keep[i]) renumber[i] = next++;
  traj::Trajectory out;
  for (std::size_t s = 0; s < full.size(); ++s) {
    const int id = full.readout[s];
    if (id >= 0 && id < n_design && keep[id]) {
      out.kx.push_back(full.kx[s]);
      out.ky.push_back(full.ky[s]);
      out.readout.push_back(renumber[id]);
    }
  }
  return out;
}

}  // namespace

traj::Trajectory make_trajectory(const ExperimentConfig& c) {
  if (c.trajectory.kind == "radial") {
    return traj::gen_radial(c.matrix, c.trajectory.spokes, c.trajectory.samples_per_spoke,
                            parse_angle_scheme(c.trajectory.angle_scheme));
  }
  traj::Trajectory full =
      traj::gen_vd_spiral(c.matrix, c.trajectory.interleaves, c.trajectory.fov_cm,
                          c.trajectory.res_mm, c.trajectory.density_exponent);
  if (c.trajectory.acceleration <= 1.0) return full;
  const int n_acq =
      std::max(1, int(std::llround(c.trajectory.interleaves / c.trajectory.acceleration)));
  if (n_acq >= c.trajectory.interleaves) return full;
  return take_readouts(full, c.trajectory.interleaves, n_acq);
}

traj::Trajectory make_acquisition_trajectory(const ExperimentConfig& c) {
  if (c.trajectory.kind == "radial") {
    return traj::gen_radial(c.matrix, c.phantom.readouts, c.trajectory.samples_per_spoke,
                            parse_angle_scheme(c.trajectory.angle_scheme));
  }
  return traj::gen_vd_spiral(c.matrix, c.phantom.readouts, c.trajectory.fov_cm,
                             c.trajectory.res_mm, c.trajectory.density_exponent);
}

}  // namespace recon::cfg
