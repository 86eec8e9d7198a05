#include "recon/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"
#include "recon/nufft.hpp"
#include "recon/threading.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace recon::sim {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t readout) {
  return mix64(mix64(seed ^ mix64(tag)) ^ mix64(readout + 1));
}

// Box-Muller over explicit (0,1] uniforms; avoids the unspecified algorithm
// of std::normal_distribution so streams are portable and stable.
struct GaussStream {
  std::mt19937_64 eng;
  bool have_spare = false;
  double spare = 0.0;

  explicit GaussStream(std::uint64_t s) : eng(s) {}

  double uniform() { return double((eng() >> 11) + 1) * 0x1.0p-53; }

  double next() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double th = kTwoPi * uniform();
    spare = r * std::sin(th);
    have_spare = true;
    return r * std::cos(th);
  }
};

void fill_rect(RVec& img, Grid2 g, double row0, double row1, double col0, double col1,
               double value) {
  const int y0 = int(std::lround(row0 * g.ny)), y1 = int(std::lround(row1 * g.ny));
  const int x0 = int(std::lround(col0 * g.nx)), x1 = int(std::lround(col1 * g.nx));
  for (int y = std::max(0, y0); y < std::min(g.ny, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(g.nx, x1); ++x)
      img[std::size_t(y) * g.nx + x] = value;
}

void fill_disk(RVec& img, Grid2 g, double row_c, double col_c, double radius_frac,
               double value) {
  const double cy = row_c * g.ny, cx = col_c * g.nx;
  const double r = radius_frac * std::min(g.nx, g.ny);
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x) {
      const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
      if (dy * dy + dx * dx <= r * r) img[std::size_t(y) * g.nx + x] = value;
    }
}

RVec circshift_rows(const RVec& img, Grid2 g, int shift) {
  RVec out(img.size());
  const int ny = g.ny;
  for (int y = 0; y < ny; ++y) {
    int src = (y - shift) % ny;
    if (src < 0) src += ny;
    std::memcpy(&out[std::size_t(y) * g.nx], &img[std::size_t(src) * g.nx],
                sizeof(double) * g.nx);
  }
  return out;
}

}  // namespace

const RVec& RgbPhantom::channel(int i) const {
  switch (i) {
    case 0: return r;
    case 1: return g;
    case 2: return b;
    default: throw ArgumentError("channel index must be 0, 1, or 2");
  }
}

void RgbPhantom::validate() const {
  const std::size_t n = grid.voxels();
  if (n == 0) throw ArgumentError("RgbPhantom: empty grid");
  if (r.size() != n || g.size() != n || b.size() != n)
    throw ArgumentError("RgbPhantom: channel shapes differ");
}

RgbPhantom make_rgb_phantom(Grid2 grid) {
  if (grid.nx < 16 || grid.ny < 16) throw ArgumentError("rgb phantom grid too small");
  RgbPhantom ph;
  ph.grid = grid;
  ph.r.assign(grid.voxels(), 0.0);
  ph.g.assign(grid.voxels(), 0.0);
  ph.b.assign(grid.voxels(), 0.0);

  // Plateau over pedestal. The plateau's top edge is the strongest vertical
  // edge in every channel (0.475/0.425/0.375 under central differences), so
  // per-column strongest-edge detection locks onto the same physical edge in
  // all three channels; every other transition stays below 0.3.
  fill_rect(ph.r, grid, 0.30, 0.85, 0.10, 0.90, 0.40);
  fill_rect(ph.g, grid, 0.30, 0.85, 0.10, 0.90, 0.35);
  fill_rect(ph.b, grid, 0.30, 0.85, 0.10, 0.90, 0.30);
  fill_rect(ph.r, grid, 0.30, 0.60, 0.10, 0.90, 0.95);
  fill_rect(ph.g, grid, 0.30, 0.60, 0.10, 0.90, 0.85);
  fill_rect(ph.b, grid, 0.30, 0.60, 0.10, 0.90, 0.75);
  // low-contrast disk above the plateau for 2D structure in the profiles
  fill_disk(ph.r, grid, 0.17, 0.50, 0.07, 0.30);
  fill_disk(ph.g, grid, 0.17, 0.50, 0.07, 0.25);
  fill_disk(ph.b, grid, 0.17, 0.50, 0.07, 0.20);
  return ph;
}

RgbPhantom shift_channels(const RgbPhantom& img, int g_shift, int b_shift) {
  img.validate();
  const int limit = std::min(img.grid.nx, img.grid.ny) / 4;
  if (std::abs(g_shift) >= limit || std::abs(b_shift) >= limit)
    throw ArgumentError("channel shift must stay below a quarter of the grid");
  RgbPhantom out = img;
  out.g = circshift_rows(img.g, img.grid, g_shift);
  out.b = circshift_rows(img.b, img.grid, b_shift);
  out.g_shift += g_shift;
  out.b_shift += b_shift;
  return out;
}

void VialPhantom::validate() const {
  if (grid.voxels() == 0) throw ArgumentError("VialPhantom: empty grid");
  const double half = 0.5 * std::min(grid.nx, grid.ny);
  for (const auto& v : vials) {
    if (!(v.radius > 0.0)) throw ArgumentError("vial radius must be positive");
    if (!(v.concentration_mM > 0.0)) throw ArgumentError("vial concentration must be positive");
    if (!(v.proton_density >= 0.0)) throw ArgumentError("vial proton density must be >= 0");
    const double reach = std::hypot(v.cx, v.cy) + v.radius;
    if (reach > half - 1.0) throw ArgumentError("vial extends outside the FOV at rest");
  }
}

VialPhantom make_vial_phantom(Grid2 grid, int n_vials, double conc_min_mM, double conc_max_mM,
                              double relaxivity_r0, double relaxivity_r1) {
  if (n_vials < 1) throw ArgumentError("need at least one vial");
  if (!(conc_min_mM > 0.0) || conc_max_mM < conc_min_mM)
    throw ArgumentError("concentration range must be positive and ordered");
  VialPhantom ph;
  ph.grid = grid;
  const double n = std::min(grid.nx, grid.ny);
  const double ring = 0.30 * n;
  const double vial_r = 0.07 * n;
  for (int v = 0; v < n_vials; ++v) {
    Vial vial;
    const double th = kTwoPi * v / n_vials - M_PI / 2.0;
    vial.cx = ring * std::cos(th);
    vial.cy = ring * std::sin(th);
    vial.radius = vial_r;
    vial.concentration_mM =
        n_vials == 1 ? conc_min_mM
                     : conc_min_mM + (conc_max_mM - conc_min_mM) * v / double(n_vials - 1);
    vial.r2star = relaxivity_r0 + relaxivity_r1 * vial.concentration_mM;
    vial.proton_density = 1.0;
    ph.vials.push_back(vial);
  }
  ph.validate();
  return ph;
}

namespace {

double vial_coverage(const Vial& v, double x, double y) {
  int hits = 0;
  for (int sy = 0; sy < 4; ++sy)
    for (int sx = 0; sx < 4; ++sx) {
      const double dx = x + (sx + 0.5) / 4.0 - 0.5 - v.cx;
      const double dy = y + (sy + 0.5) / 4.0 - 0.5 - v.cy;
      if (dx * dx + dy * dy <= v.radius * v.radius) ++hits;
    }
  return hits / 16.0;
}

}  // namespace

RVec rasterize_rho(const VialPhantom& ph) {
  ph.validate();
  RVec rho(ph.grid.voxels(), ph.background);
  for (int y = 0; y < ph.grid.ny; ++y)
    for (int x = 0; x < ph.grid.nx; ++x) {
      const double cx = x - ph.grid.nx / 2, cy = y - ph.grid.ny / 2;
      double val = ph.background;
      for (const auto& v : ph.vials) {
        const double cov = vial_coverage(v, cx, cy);
        if (cov > 0.0) val = val * (1.0 - cov) + v.proton_density * cov;
      }
      rho[std::size_t(y) * ph.grid.nx + x] = val;
    }
  return rho;
}

RVec rasterize_r2star(const VialPhantom& ph) {
  ph.validate();
  RVec r2s(ph.grid.voxels(), 0.0);
  for (int y = 0; y < ph.grid.ny; ++y)
    for (int x = 0; x < ph.grid.nx; ++x) {
      const double cx = x - ph.grid.nx / 2, cy = y - ph.grid.ny / 2;
      for (const auto& v : ph.vials) {
        if (vial_coverage(v, cx, cy) >= 0.5) {
          r2s[std::size_t(y) * ph.grid.nx + x] = v.r2star;
          break;
        }
      }
    }
  return r2s;
}

void MotionModel::validate() const {
  if (!(amplitude_voxels >= 0.0)) throw ArgumentError("motion amplitude must be >= 0");
  if (kind == MotionKind::periodic_translation && !(period_s > 0.0))
    throw ArgumentError("motion period must be positive");
}

double MotionModel::displacement(double t_s) const {
  if (kind == MotionKind::none) return 0.0;
  return amplitude_voxels * std::sin(kTwoPi * t_s / period_s + phase_rad);
}

void RespSignal::validate() const {
  if (amplitude.size() != time_s.size())
    throw ArgumentError("RespSignal: amplitude/time length mismatch");
}

RespSignal synth_resp_signal(std::size_t n_readouts, double period_s, RespPattern pattern) {
  if (n_readouts == 0) throw ArgumentError("need at least one readout");
  if (period_s <= 0.0) throw ArgumentError("period must be positive");
  const double amp = pattern == RespPattern::deep ? 2.0 : 1.0;
  const double period = pattern == RespPattern::deep ? 2.0 * period_s : period_s;
  RespSignal sig;
  sig.amplitude.resize(n_readouts);
  sig.time_s.resize(n_readouts);
  for (std::size_t i = 0; i < n_readouts; ++i) {
    const double t = double(i) * kReadoutIntervalS;
    sig.time_s[i] = t;
    sig.amplitude[i] = amp * std::sin(kTwoPi * t / period);
  }
  return sig;
}

namespace {

// sample ranges per readout id; requires dense nondecreasing ids
std::vector<std::pair<std::size_t, std::size_t>> readout_ranges(const traj::Trajectory& t) {
  const std::size_t m = t.num_readouts();
  std::vector<std::pair<std::size_t, std::size_t>> ranges(m, {0, 0});
  std::size_t i = 0;
  for (std::uint32_t r = 0; r < m; ++r) {
    const std::size_t first = i;
    while (i < t.size() && t.readout[i] == r) ++i;
    if (i == first) throw ArgumentError("trajectory has an empty readout");
    ranges[r] = {first, i - first};
  }
  return ranges;
}

}  // namespace

void add_noise(CVec& samples, const traj::Trajectory& trajectory, double noise_std,
               std::uint64_t seed, std::uint64_t stream_tag) {
  if (noise_std < 0.0) throw ArgumentError("noise_std must be >= 0");
  if (samples.size() != trajectory.size())
    throw ArgumentError("sample count does not match trajectory");
  if (noise_std == 0.0) return;
  const auto ranges = readout_ranges(trajectory);
  const double comp_std = noise_std / std::sqrt(2.0);
  for (std::size_t r = 0; r < ranges.size(); ++r) {
    GaussStream gs(stream_seed(seed, stream_tag, r));
    for (std::size_t i = 0; i < ranges[r].second; ++i) {
      const double re = gs.next(), im = gs.next();
      samples[ranges[r].first + i] += cdouble{comp_std * re, comp_std * im};
    }
  }
}

std::pair<SampleStream, RespSignal> simulate_multiecho_kspace(
    const VialPhantom& phantom, const traj::Trajectory& trajectory,
    const std::vector<CVec>& coil_maps, RVec te_ms, const MotionModel& motion, double noise_std,
    std::uint64_t seed) {
  phantom.validate();
  motion.validate();
  if (trajectory.size() == 0) throw ArgumentError("empty trajectory");
  trajectory.validate();
  if (te_ms.empty()) throw ArgumentError("need at least one echo time");
  for (std::size_t k = 1; k < te_ms.size(); ++k)
    if (!(te_ms[k] > te_ms[k - 1])) throw ArgumentError("echo times must be strictly increasing");
  if (coil_maps.empty()) throw ArgumentError("need at least one coil map");
  for (const auto& c : coil_maps)
    if (c.size() != phantom.grid.voxels()) throw ArgumentError("coil map does not match grid");
  if (noise_std < 0.0) throw ArgumentError("noise_std must be >= 0");

  const std::size_t n = phantom.grid.voxels();
  const int e = static_cast<int>(te_ms.size());
  const int c = static_cast<int>(coil_maps.size());
  const RVec rho = rasterize_rho(phantom);
  const RVec r2s = rasterize_r2star(phantom);

  std::vector<CVec> echo_imgs(e, CVec(n));
  for (int k = 0; k < e; ++k)
    for (std::size_t i = 0; i < n; ++i)
      echo_imgs[k][i] = cdouble{rho[i] * std::exp(-r2s[i] * te_ms[k] * 1e-3), 0.0};

  const auto ranges = readout_ranges(trajectory);
  RespSignal resp;
  resp.amplitude.resize(ranges.size());
  resp.time_s.resize(ranges.size());
  for (std::size_t r = 0; r < ranges.size(); ++r) {
    resp.time_s[r] = double(r) * kReadoutIntervalS;
    resp.amplitude[r] = motion.displacement(resp.time_s[r]);
  }

  SampleStream stream;
  stream.grid = phantom.grid;
  stream.traj = trajectory;
  stream.te_ms = std::move(te_ms);
  stream.n_coils = c;
  stream.seed = seed;
  stream.samples.resize(std::size_t(e) * c);

  const nufft::NufftPlan plan = nufft::plan_nufft(phantom.grid);
  threads::parallel_for(std::size_t(e) * c, [&](std::size_t idx) {
    const int k = static_cast<int>(idx) / c;
    const int j = static_cast<int>(idx) % c;
    CVec weighted(n);
    kernels::cmul_to(n, coil_maps[j].data(), echo_imgs[k].data(), weighted.data());
    CVec s = nufft::nufft_forward(plan, weighted, trajectory);
    for (std::size_t r = 0; r < ranges.size(); ++r) {
      const double d = resp.amplitude[r];
      if (d != 0.0) {
        for (std::size_t i = ranges[r].first; i < ranges[r].first + ranges[r].second; ++i) {
          const double ph = -kTwoPi * trajectory.ky[i] * d;
          s[i] *= cdouble{std::cos(ph), std::sin(ph)};
        }
      }
    }
    add_noise(s, trajectory, noise_std, seed, idx);
    stream.samples[idx] = std::move(s);
  });
  return {std::move(stream), std::move(resp)};
}

std::size_t KSpaceBundle::sample_index(int echo, int coil, int state) const {
  return (std::size_t(echo) * n_coils + coil) * n_states + state;
}

void KSpaceBundle::validate() const {
  if (grid.voxels() == 0) throw ArgumentError("bundle: empty grid");
  if (n_coils < 1 || n_states < 1) throw ArgumentError("bundle: need coils and states >= 1");
  if (te_ms.empty()) throw ArgumentError("bundle: need echo times");
  for (std::size_t k = 1; k < te_ms.size(); ++k)
    if (!(te_ms[k] > te_ms[k - 1]))
      throw ArgumentError("bundle: echo times must be strictly increasing");
  if (state_traj.size() != std::size_t(n_states)) throw ArgumentError("bundle: state count");
  if (samples.size() != te_ms.size() * std::size_t(n_coils) * n_states)
    throw ArgumentError("bundle: sample vector count mismatch");
  for (int t = 0; t < n_states; ++t) {
    state_traj[t].validate();
    for (int k = 0; k < n_echoes(); ++k)
      for (int j = 0; j < n_coils; ++j)
        if (samples[sample_index(k, j, t)].size() != state_traj[t].size())
          throw ArgumentError("bundle: sample count does not match state trajectory");
  }
  resp.validate();
}

KSpaceBundle bin_kspace(const SampleStream& stream, const RespSignal& resp, int n_states) {
  if (n_states < 1) throw ArgumentError("need at least one motion state");
  stream.traj.validate();
  resp.validate();
  const auto ranges = readout_ranges(stream.traj);
  const std::size_t m = ranges.size();
  if (resp.amplitude.size() != m)
    throw ArgumentError("respiratory signal must have one value per readout");
  if (m < std::size_t(n_states)) throw ArgumentError("more motion states than readouts");
  if (stream.samples.size() != stream.te_ms.size() * std::size_t(stream.n_coils))
    throw ArgumentError("stream sample vector count mismatch");

  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return resp.amplitude[a] < resp.amplitude[b];
  });

  const std::size_t per_state = m / n_states;
  KSpaceBundle bundle;
  bundle.grid = stream.grid;
  bundle.n_coils = stream.n_coils;
  bundle.n_states = n_states;
  bundle.te_ms = stream.te_ms;
  bundle.seed = stream.seed;
  bundle.resp = resp;
  bundle.samples_per_readout = ranges[0].second;
  for (const auto& r : ranges)
    if (r.second != bundle.samples_per_readout) bundle.samples_per_readout = 0;

  const int e = stream.n_echoes();
  bundle.state_traj.resize(n_states);
  bundle.state_readouts.resize(n_states);
  bundle.samples.resize(std::size_t(e) * stream.n_coils * n_states);
  for (int t = 0; t < n_states; ++t) {
    std::vector<std::uint32_t> members(order.begin() + t * per_state,
                                       order.begin() + (t + 1) * per_state);
    std::sort(members.begin(), members.end());
    traj::Trajectory& st = bundle.state_traj[t];
    std::size_t total = 0;
    for (const auto r : members) total += ranges[r].second;
    st.kx.reserve(total);
    st.ky.reserve(total);
    st.readout.reserve(total);
    for (const auto r : members) {
      const auto [first, count] = ranges[r];
      st.kx.insert(st.kx.end(), stream.traj.kx.begin() + first,
                   stream.traj.kx.begin() + first + count);
      st.ky.insert(st.ky.end(), stream.traj.ky.begin() + first,
                   stream.traj.ky.begin() + first + count);
      st.readout.insert(st.readout.end(), count, r);
    }
    for (int k = 0; k < e; ++k)
      for (int j = 0; j < stream.n_coils; ++j) {
        const CVec& src = stream.samples[std::size_t(k) * stream.n_coils + j];
        CVec& dst = bundle.samples[bundle.sample_index(k, j, t)];
        dst.reserve(total);
        for (const auto r : members)
          dst.insert(dst.end(), src.begin() + ranges[r].first,
                     src.begin() + ranges[r].first + ranges[r].second);
      }
    bundle.state_readouts[t] = std::move(members);
  }
  bundle.validate();
  return bundle;
}

std::vector<CVec> gen_coil_maps(int n_coils, Grid2 grid) {
  if (n_coils < 1) throw ArgumentError("need at least one coil");
  if (grid.voxels() == 0) throw ArgumentError("empty grid");
  const double n = std::min(grid.nx, grid.ny);
  const double lobe_r = 0.75 * 0.5 * n;
  const double sigma = 0.55 * n;
  const double cx0 = grid.nx / 2.0, cy0 = grid.ny / 2.0;

  std::vector<RVec> mag(n_coils, RVec(grid.voxels()));
  RVec norm(grid.voxels(), 0.0);
  for (int j = 0; j < n_coils; ++j) {
    const double th = kTwoPi * j / n_coils;
    const double lx = cx0 + lobe_r * std::cos(th);
    const double ly = cy0 + lobe_r * std::sin(th);
    for (int y = 0; y < grid.ny; ++y)
      for (int x = 0; x < grid.nx; ++x) {
        const double d2 = (x - lx) * (x - lx) + (y - ly) * (y - ly);
        const double g = std::exp(-d2 / (2.0 * sigma * sigma));
        mag[j][std::size_t(y) * grid.nx + x] = g;
        norm[std::size_t(y) * grid.nx + x] += g * g;
      }
  }
  std::vector<CVec> maps(n_coils, CVec(grid.voxels()));
  for (int j = 0; j < n_coils; ++j) {
    const double th = kTwoPi * j / n_coils;
    const double px = j == 0 ? 0.0 : 0.3 * std::cos(th);
    const double py = j == 0 ? 0.0 : 0.3 * std::sin(th);
    for (int y = 0; y < grid.ny; ++y)
      for (int x = 0; x < grid.nx; ++x) {
        const std::size_t i = std::size_t(y) * grid.nx + x;
        const double a = mag[j][i] / std::sqrt(norm[i]);
        const double ph = kTwoPi * (px * (x - cx0) + py * (y - cy0)) / n;
        maps[j][i] = cdouble{a * std::cos(ph), a * std::sin(ph)};
      }
  }
  return maps;
}

namespace {

constexpr char kSampleMagic[8] = {'R', 'C', 'N', 'S', 'M', 'P', '0', '1'};

std::string state_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traj_state%03d.bin", t);
  return buf;
}

std::string sample_name(int k, int j, int t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "samples_e%02d_c%02d_s%03d.bin", k, j, t);
  return buf;
}

void write_samples_file(const CVec& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::uint64_t count = s.size();
  out.write(kSampleMagic, 8);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(s.data()),
            static_cast<std::streamsize>(s.size() * sizeof(cdouble)));
  if (!out) throw IoError("write failed: " + path);
}

CVec read_samples_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  if (!in.read(magic, 8)) throw FormatError(path, 0, "truncated header");
  if (std::memcmp(magic, kSampleMagic, 8) != 0) throw FormatError(path, 0, "bad magic");
  std::uint64_t count = 0;
  if (!in.read(reinterpret_cast<char*>(&count), 8)) throw FormatError(path, 8, "truncated header");
  CVec s(count);
  if (count &&
      !in.read(reinterpret_cast<char*>(s.data()),
               static_cast<std::streamsize>(count * sizeof(cdouble)))) {
    throw FormatError(path, std::size_t(16 + in.gcount()), "truncated sample data");
  }
  return s;
}

}  // namespace

void save_bundle(const KSpaceBundle& bundle, const std::string& dir) {
  bundle.validate();
  if (bundle.samples_per_readout == 0)
    throw ArgumentError("bundle serialization needs a uniform samples-per-readout count");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  json meta;
  meta["format"] = "kspace-bundle-v1";
  meta["grid"] = {{"nx", bundle.grid.nx}, {"ny", bundle.grid.ny}};
  meta["n_coils"] = bundle.n_coils;
  meta["n_echoes"] = bundle.n_echoes();
  meta["n_states"] = bundle.n_states;
  meta["te_ms"] = bundle.te_ms;
  meta["seed"] = bundle.seed;
  meta["samples_per_readout"] = bundle.samples_per_readout;
  meta["state_readouts"] = bundle.state_readouts;
  const std::string meta_path = dir + "/meta.json";
  std::ofstream mf(meta_path, std::ios::binary);
  if (!mf) throw IoError("cannot open for writing: " + meta_path);
  mf << meta.dump(2) << "\n";
  if (!mf) throw IoError("write failed: " + meta_path);

  for (int t = 0; t < bundle.n_states; ++t)
    traj::write_binary(bundle.state_traj[t], dir + "/" + state_name(t));
  for (int k = 0; k < bundle.n_echoes(); ++k)
    for (int j = 0; j < bundle.n_coils; ++j)
      for (int t = 0; t < bundle.n_states; ++t)
        write_samples_file(bundle.samples[bundle.sample_index(k, j, t)],
                           dir + "/" + sample_name(k, j, t));

  const std::string resp_path = dir + "/resp.csv";
  std::ofstream rf(resp_path, std::ios::binary);
  if (!rf) throw IoError("cannot open for writing: " + resp_path);
  rf << "readout,time_s,amplitude\n";
  char line[96];
  for (std::size_t r = 0; r < bundle.resp.amplitude.size(); ++r) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", r, bundle.resp.time_s[r],
                  bundle.resp.amplitude[r]);
    rf << line;
  }
  if (!rf) throw IoError("write failed: " + resp_path);
}

namespace {

RespSignal read_resp_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw FormatError(path, 0, "missing header");
  if (line == "readout,time_s,amplitude\r") line.pop_back();
  if (line != "readout,time_s,amplitude") throw FormatError(path, 0, "unexpected header");
  offset += line.size() + 1;
  RespSignal sig;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw FormatError(path, offset, "expected readout,time_s,amplitude");
    try {
      sig.time_s.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
      sig.amplitude.push_back(std::stod(line.substr(c2 + 1)));
    } catch (const std::exception&) {
      throw FormatError(path, offset, "bad number");
    }
    offset += line.size() + 1;
  }
  return sig;
}

}  // namespace

KSpaceBundle load_bundle(const std::string& dir) {
  const std::string meta_path = dir + "/meta.json";
  std::ifstream mf(meta_path, std::ios::binary);
  if (!mf) throw IoError("cannot open: " + meta_path);
  json meta;
  try {
    meta = json::parse(mf);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(meta_path, e.byte, e.what());
  }

  KSpaceBundle bundle;
  try {
    if (meta.at("format").get<std::string>() != "kspace-bundle-v1")
      throw FormatError(meta_path, 0, "unknown bundle format");
    bundle.grid.nx = meta.at("grid").at("nx").get<int>();
    bundle.grid.ny = meta.at("grid").at("ny").get<int>();
    bundle.n_coils = meta.at("n_coils").get<int>();
    bundle.n_states = meta.at("n_states").get<int>();
    bundle.te_ms = meta.at("te_ms").get<RVec>();
    bundle.seed = meta.at("seed").get<std::uint64_t>();
    bundle.samples_per_readout = meta.at("samples_per_readout").get<std::size_t>();
    bundle.state_readouts = meta.at("state_readouts").get<std::vector<std::vector<std::uint32_t>>>();
    if (int(bundle.te_ms.size()) != meta.at("n_echoes").get<int>())
      throw FormatError(meta_path, 0, "n_echoes does not match te_ms");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path, 0, e.what());
  }
  if (bundle.n_states < 1 || bundle.n_coils < 1 || bundle.te_ms.empty())
    throw FormatError(meta_path, 0, "invalid bundle dimensions");
  if (bundle.state_readouts.size() != std::size_t(bundle.n_states))
    throw FormatError(meta_path, 0, "state_readouts does not match n_states");

  bundle.state_traj.resize(bundle.n_states);
  for (int t = 0; t < bundle.n_states; ++t) {
    const std::string tp = dir + "/" + state_name(t);
    traj::Trajectory st = traj::read_binary(tp, bundle.samples_per_readout);
    // restore the acquisition readout ids recorded in the metadata
    const auto& ids = bundle.state_readouts[t];
    if (bundle.samples_per_readout == 0 ||
        st.size() != ids.size() * bundle.samples_per_readout) {
      throw FormatError(tp, 0, "sample count does not match state readout list");
    }
    for (std::size_t i = 0; i < st.size(); ++i)
      st.readout[i] = ids[i / bundle.samples_per_readout];
    bundle.state_traj[t] = std::move(st);
  }

  bundle.samples.resize(bundle.te_ms.size() * std::size_t(bundle.n_coils) * bundle.n_states);
  for (int k = 0; k < bundle.n_echoes(); ++k)
    for (int j = 0; j < bundle.n_coils; ++j)
      for (int t = 0; t < bundle.n_states; ++t)
        bundle.samples[bundle.sample_index(k, j, t)] =
            read_samples_file(dir + "/" + sample_name(k, j, t));

  bundle.resp = read_resp_csv(dir + "/resp.csv");
  bundle.validate();
  return bundle;
}

}  // namespace recon::sim
