#include "recon/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "kb_kernel.hpp"
#include "recon/errors.hpp"

namespace recon::traj {
namespace {

constexpr double kKernelWidth = 4.0;
constexpr double kOversampling = 2.0;
constexpr char kBinaryMagic[8] = {'R', 'C', 'N', 'T', 'R', 'J', '0', '1'};

// gyromagnetic ratio / (2 pi) in Hz/T, and the 3.1-style hardware assumptions
// behind the spiral spacing cap
constexpr double kGammaBar = 42.5764e6;
constexpr double kGmaxTPerM = 0.080;
constexpr double kDwellS = 4e-6;

void check(bool ok, const char* msg) {
  if (!ok) throw ArgumentError(msg);
}

}  // namespace

void Trajectory::validate() const {
  check(!kx.empty(), "trajectory has no samples");
  check(kx.size() == ky.size() && kx.size() == readout.size(),
        "trajectory component lengths differ");
  for (std::size_t i = 0; i < kx.size(); ++i) {
    const bool in_range = std::isfinite(kx[i]) && std::isfinite(ky[i]) && kx[i] >= -0.5 &&
                          kx[i] < 0.5 && ky[i] >= -0.5 && ky[i] < 0.5;
    if (!in_range) throw ArgumentError("trajectory coordinate outside [-0.5, 0.5)");
    if (i > 0 && readout[i] < readout[i - 1]) {
      throw ArgumentError("trajectory readout tags must be nondecreasing");
    }
  }
}

int nyquist_spokes(int matrix_size, double acceleration) {
  check(matrix_size >= 8, "matrix_size must be >= 8");
  check(acceleration > 0.0, "acceleration must be positive");
  return static_cast<int>(std::ceil(M_PI_2 * matrix_size / acceleration));
}

Trajectory gen_radial(int matrix_size, int num_spokes, int samples_per_spoke,
                      AngleScheme scheme) {
  check(matrix_size >= 8, "matrix_size must be >= 8");
  check(num_spokes >= 1, "num_spokes must be >= 1");
  check(samples_per_spoke >= 2, "samples_per_spoke must be >= 2");

  // golden-angle increment pi/phi (111.246 degrees)
  const double golden = M_PI / ((1.0 + std::sqrt(5.0)) / 2.0);
  const double half_open = std::nextafter(0.5, -1.0);

  Trajectory t;
  const std::size_t n = static_cast<std::size_t>(num_spokes) * samples_per_spoke;
  t.kx.reserve(n);
  t.ky.reserve(n);
  t.readout.reserve(n);
  for (int i = 0; i < num_spokes; ++i) {
    const double angle = scheme == AngleScheme::uniform
                             ? M_PI * i / num_spokes
                             : std::fmod(i * golden, M_PI);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int s = 0; s < samples_per_spoke; ++s) {
      double r = -0.5 + static_cast<double>(s) / (samples_per_spoke - 1);
      if (r >= 0.5) r = half_open;
      t.kx.push_back(r * ca);
      t.ky.push_back(r * sa);
      t.readout.push_back(static_cast<std::uint32_t>(i));
    }
  }
  t.validate();
  return t;
}

Trajectory gen_vd_spiral(int matrix_size, int num_interleaves, double fov_cm, double res_mm,
                         double density_exponent) {
  check(matrix_size >= 8, "matrix_size must be >= 8");
  check(num_interleaves >= 1, "num_interleaves must be >= 1");
  check(fov_cm > 0.0, "fov_cm must be positive");
  check(res_mm > 0.0, "res_mm must be positive");
  check(density_exponent >= 1.0, "density_exponent must be >= 1");

  const double alpha = density_exponent;
  const double turns = std::max(1.0, matrix_size / (2.0 * num_interleaves));
  const double grad_cap = kGammaBar * kGmaxTPerM * kDwellS * (fov_cm / 100.0) / matrix_size;
  const double spacing = std::min(0.9 / matrix_size, grad_cap);

  const auto speed = [&](double f) {
    const double radial = 0.5 * alpha * std::pow(f, alpha - 1.0);
    const double azimuthal = 2.0 * M_PI * turns * 0.5 * std::pow(f, alpha);
    return std::hypot(radial, azimuthal);
  };

  // march the turn fraction so consecutive samples sit ~spacing apart; speed
  // is nondecreasing in f, so evaluating it at the trial endpoint cannot
  // overshoot the cap
  std::vector<double> fracs{0.0};
  double f = 0.0;
  while (true) {
    const double v = speed(f);
    double df;
    if (v <= 0.0) {
      df = std::pow(2.0 * spacing, 1.0 / alpha);  // first step: solve r(f) = spacing
    } else {
      const double trial = std::min(f + spacing / v, 1.0);
      df = spacing / speed(trial);
    }
    f += df;
    if (f >= 1.0) break;
    fracs.push_back(f);
  }
  check(!fracs.empty(), "spiral parameters yield no samples");

  Trajectory t;
  const std::size_t n = fracs.size() * num_interleaves;
  t.kx.reserve(n);
  t.ky.reserve(n);
  t.readout.reserve(n);
  for (int il = 0; il < num_interleaves; ++il) {
    const double rot = 2.0 * M_PI * il / num_interleaves;
    for (const double fi : fracs) {
      const double r = 0.5 * std::pow(fi, alpha);
      const double angle = 2.0 * M_PI * turns * fi + rot;
      t.kx.push_back(r * std::cos(angle));
      t.ky.push_back(r * std::sin(angle));
      t.readout.push_back(static_cast<std::uint32_t>(il));
    }
  }
  t.validate();
  return t;
}

namespace {

struct GridOp {
  int n = 0;  // oversampled grid size per side
  double beta = 0.0;
  double inv_i0 = 0.0;

  explicit GridOp(int grid) : n(grid) {
    beta = kb::beatty_beta(kKernelWidth, kOversampling);
    inv_i0 = 1.0 / kb::i0(beta);
  }

  static int wrap(int c, int n) {
    c %= n;
    return c < 0 ? c + n : c;
  }

  // G v = interpolate(spread(v)) at the sample locations themselves
  void apply(const Trajectory& traj, const std::vector<double>& v,
             std::vector<double>& out) const {
    const std::size_t m = traj.size();
    std::vector<double> grid(static_cast<std::size_t>(n) * n, 0.0);
    const double half_w = kKernelWidth / 2.0;
    const auto cell_range = [&](double p, int& first, int& count) {
      first = static_cast<int>(std::ceil(p - half_w));
      count = static_cast<int>(std::floor(p + half_w)) - first + 1;
    };
    std::vector<double> wx(8), wy(8);
    for (std::size_t i = 0; i < m; ++i) {
      const double px = traj.kx[i] * n, py = traj.ky[i] * n;
      int fx, cx, fy, cy;
      cell_range(px, fx, cx);
      cell_range(py, fy, cy);
      for (int a = 0; a < cx; ++a) wx[a] = kb::kernel(px - (fx + a), kKernelWidth, beta, inv_i0);
      for (int b = 0; b < cy; ++b) wy[b] = kb::kernel(py - (fy + b), kKernelWidth, beta, inv_i0);
      for (int b = 0; b < cy; ++b) {
        double* row = grid.data() + static_cast<std::size_t>(wrap(fy + b, n)) * n;
        const double vy = v[i] * wy[b];
        for (int a = 0; a < cx; ++a) row[wrap(fx + a, n)] += vy * wx[a];
      }
    }
    out.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double px = traj.kx[i] * n, py = traj.ky[i] * n;
      int fx, cx, fy, cy;
      cell_range(px, fx, cx);
      cell_range(py, fy, cy);
      for (int a = 0; a < cx; ++a) wx[a] = kb::kernel(px - (fx + a), kKernelWidth, beta, inv_i0);
      for (int b = 0; b < cy; ++b) wy[b] = kb::kernel(py - (fy + b), kKernelWidth, beta, inv_i0);
      double acc = 0.0;
      for (int b = 0; b < cy; ++b) {
        const double* row = grid.data() + static_cast<std::size_t>(wrap(fy + b, n)) * n;
        double rowacc = 0.0;
        for (int a = 0; a < cx; ++a) rowacc += row[wrap(fx + a, n)] * wx[a];
        acc += rowacc * wy[b];
      }
      out[i] = acc;
    }
  }
};

int infer_matrix(const Trajectory& traj) {
  std::vector<double> gaps;
  gaps.reserve(traj.size());
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (traj.readout[i] != traj.readout[i - 1]) continue;
    const double g = std::hypot(traj.kx[i] - traj.kx[i - 1], traj.ky[i] - traj.ky[i - 1]);
    if (g > 0.0) gaps.push_back(g);
  }
  if (gaps.empty()) return 64;
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double med = gaps[gaps.size() / 2];
  const double est = 1.0 / med;
  return static_cast<int>(std::clamp(std::lround(est), 8l, 2048l));
}

}  // namespace

DensityWeights compute_density_weights(const Trajectory& traj, int iterations, int matrix_size) {
  traj.validate();
  check(iterations >= 1, "density iterations must be >= 1");
  check(matrix_size >= 0, "matrix_size must be >= 0");
  const int matrix = matrix_size > 0 ? matrix_size : infer_matrix(traj);

  const GridOp op(2 * matrix);
  const std::size_t m = traj.size();
  std::vector<double> v(m, 1.0), gv;
  for (int it = 0; it < iterations; ++it) {
    op.apply(traj, v, gv);
    for (std::size_t i = 0; i < m; ++i) {
      if (!(gv[i] > 1e-300)) {
        throw NumericError("density compensation fixed point: gridding value vanished at sample " +
                           std::to_string(i));
      }
      v[i] /= gv[i];
    }
  }
  double total = 0.0;
  for (const double x : v) total += x;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("density compensation weights did not normalize");
  }
  DensityWeights dw;
  dw.w.resize(m);
  for (std::size_t i = 0; i < m; ++i) dw.w[i] = v[i] / total;
  dw.grid_size = op.n;
  dw.gridding_scale = total;
  return dw;
}

std::vector<double> density_residual(const Trajectory& traj, const DensityWeights& dw) {
  traj.validate();
  check(dw.w.size() == traj.size(), "weights length does not match trajectory");
  check(dw.grid_size > 0, "weights carry no gridding geometry");
  const GridOp op(dw.grid_size);
  std::vector<double> res;
  op.apply(traj, dw.w, res);
  for (double& r : res) r *= dw.gridding_scale;
  return res;
}

void write_csv(const Trajectory& traj, const std::string& path) {
  traj.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "kx,ky,readout\n";
  char line[96];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%u\n", traj.kx[i], traj.ky[i],
                  traj.readout[i]);
    out << line;
  }
  if (!out) throw IoError("write failed: " + path);
}

Trajectory read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw FormatError(path, 0, "empty trajectory CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "kx,ky,readout") throw FormatError(path, 0, "expected header kx,ky,readout");
  offset += line.size() + 1;

  Trajectory t;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    double kx = 0.0, ky = 0.0;
    std::uint32_t r = 0;
    auto res = std::from_chars(p, end, kx);
    if (res.ec != std::errc() || res.ptr == end || *res.ptr != ',') {
      throw FormatError(path, line_start, "bad kx field");
    }
    res = std::from_chars(res.ptr + 1, end, ky);
    if (res.ec != std::errc() || res.ptr == end || *res.ptr != ',') {
      throw FormatError(path, line_start, "bad ky field");
    }
    res = std::from_chars(res.ptr + 1, end, r);
    if (res.ec != std::errc() || res.ptr != end) {
      throw FormatError(path, line_start, "bad readout field");
    }
    t.kx.push_back(kx);
    t.ky.push_back(ky);
    t.readout.push_back(r);
  }
  try {
    t.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(path, 0, e.what());
  }
  return t;
}

void write_binary(const Trajectory& traj, const std::string& path) {
  traj.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kBinaryMagic, 8);
  const std::uint64_t count = traj.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out.write(reinterpret_cast<const char*>(&traj.kx[i]), 8);
    out.write(reinterpret_cast<const char*>(&traj.ky[i]), 8);
  }
  if (!out) throw IoError("write failed: " + path);
}

Trajectory read_binary(const std::string& path, std::size_t samples_per_readout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kBinaryMagic, 8) != 0) {
    throw FormatError(path, 0, "bad trajectory magic");
  }
  std::uint64_t count = 0;
  if (!in.read(reinterpret_cast<char*>(&count), 8)) {
    throw FormatError(path, 8, "truncated header");
  }
  Trajectory t;
  t.kx.resize(count);
  t.ky.resize(count);
  t.readout.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    double pair[2];
    if (!in.read(reinterpret_cast<char*>(pair), 16)) {
      throw FormatError(path, 16 + i * 16, "truncated sample data");
    }
    t.kx[i] = pair[0];
    t.ky[i] = pair[1];
    t.readout[i] = samples_per_readout > 0 ? static_cast<std::uint32_t>(i / samples_per_readout)
                                           : 0u;
  }
  try {
    t.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(path, 16, e.what());
  }
  return t;
}

}  // namespace recon::traj
