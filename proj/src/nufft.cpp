#include "recon/nufft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

#include "kb_kernel.hpp"
#include "recon/errors.hpp"
#include "recon/kernels.hpp"

namespace recon::nufft {
namespace {

// FFTW's planner is not reentrant; plan creation/destruction serialize here.
// Execution via fftw_execute_dft on per-call arrays is thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int even_ceil(double v) {
  int n = static_cast<int>(std::ceil(v));
  return n % 2 == 0 ? n : n + 1;
}

void check_traj(const traj::Trajectory& t) {
  if (t.size() == 0) throw ArgumentError("empty trajectory");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = t.kx[i], y = t.ky[i];
    if (!(x >= -0.5 && x < 0.5 && y >= -0.5 && y < 0.5)) {
      throw ArgumentError("trajectory coordinate outside [-0.5, 0.5)");
    }
  }
}

inline int wrap(int c, int n) {
  c %= n;
  return c < 0 ? c + n : c;
}

}  // namespace

struct NufftPlan::Impl {
  Grid2 grid{};
  Grid2 os{};
  int width = 0;
  double beta = 0.0;
  double inv_i0 = 0.0;
  RVec deapod;  // nx*ny, strictly positive
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

NufftPlan::NufftPlan(Grid2 grid, double oversampling, int kernel_width)
    : impl_(std::make_unique<Impl>()) {
  if (grid.nx < 8 || grid.ny < 8) throw ArgumentError("grid must be at least 8 per side");
  if (!(oversampling >= 1.0)) throw ArgumentError("oversampling must be >= 1");
  if (kernel_width < 2) throw ArgumentError("kernel_width must be >= 2");

  Impl& im = *impl_;
  im.grid = grid;
  im.os = {even_ceil(oversampling * grid.nx), even_ceil(oversampling * grid.ny)};
  if (kernel_width > im.os.nx || kernel_width > im.os.ny) {
    throw ArgumentError("kernel_width exceeds the oversampled grid");
  }
  im.width = kernel_width;
  im.beta = kb::beatty_beta(kernel_width, oversampling);
  im.inv_i0 = 1.0 / kb::i0(im.beta);

  im.deapod.resize(grid.voxels());
  std::vector<double> cx(grid.nx), cy(grid.ny);
  for (int ix = 0; ix < grid.nx; ++ix) {
    const double nu = static_cast<double>(ix - grid.nx / 2) / im.os.nx;
    cx[ix] = kb::kernel_ft(nu, im.width, im.beta, im.inv_i0);
  }
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double nu = static_cast<double>(iy - grid.ny / 2) / im.os.ny;
    cy[iy] = kb::kernel_ft(nu, im.width, im.beta, im.inv_i0);
  }
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double c = cx[ix] * cy[iy];
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw ArgumentError("kernel transform not positive over the grid");
      }
      im.deapod[static_cast<std::size_t>(iy) * grid.nx + ix] = 1.0 / c;
    }
  }

  std::vector<cdouble> a(im.os.voxels()), b(im.os.voxels());
  std::lock_guard<std::mutex> lock(planner_mutex());
  im.fwd = fftw_plan_dft_2d(im.os.ny, im.os.nx, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  im.bwd = fftw_plan_dft_2d(im.os.ny, im.os.nx, reinterpret_cast<fftw_complex*>(a.data()),
                            reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!im.fwd || !im.bwd) throw NumericError("FFT planning failed");
}

NufftPlan::~NufftPlan() = default;
NufftPlan::NufftPlan(NufftPlan&&) noexcept = default;
NufftPlan& NufftPlan::operator=(NufftPlan&&) noexcept = default;

Grid2 NufftPlan::grid() const { return impl_->grid; }
Grid2 NufftPlan::oversampled_grid() const { return impl_->os; }

NufftPlan plan_nufft(Grid2 grid, double oversampling, int kernel_width) {
  return NufftPlan(grid, oversampling, kernel_width);
}

namespace {

// Per-sample separable kernel weights with the (-1)^cell sign folded in. The
// sign implements the centered DFT: with the image embedded at array offset
// N/2, the exact spectrum at centered integer cell c is (-1)^c times the
// plain FFT bin c mod N (N even), so gather and spread carry it on each cell.
struct Stencil {
  int first_x, count_x, first_y, count_y;
  double wx[8], wy[8];
};

inline Stencil make_stencil(const NufftPlan::Impl& im, double kx, double ky) {
  Stencil s;
  const double half_w = im.width / 2.0;
  const double px = kx * im.os.nx, py = ky * im.os.ny;
  s.first_x = static_cast<int>(std::ceil(px - half_w));
  s.count_x = static_cast<int>(std::floor(px + half_w)) - s.first_x + 1;
  s.first_y = static_cast<int>(std::ceil(py - half_w));
  s.count_y = static_cast<int>(std::floor(py + half_w)) - s.first_y + 1;
  for (int a = 0; a < s.count_x; ++a) {
    const int c = s.first_x + a;
    const double w = kb::kernel(px - c, im.width, im.beta, im.inv_i0);
    s.wx[a] = (c & 1) ? -w : w;
  }
  for (int b = 0; b < s.count_y; ++b) {
    const int c = s.first_y + b;
    const double w = kb::kernel(py - c, im.width, im.beta, im.inv_i0);
    s.wy[b] = (c & 1) ? -w : w;
  }
  return s;
}

}  // namespace

CVec nufft_forward(const NufftPlan& plan, const CVec& img, const traj::Trajectory& traj) {
  const auto& im = plan.impl();
  if (img.size() != im.grid.voxels()) throw ArgumentError("image does not match plan grid");
  check_traj(traj);

  std::vector<cdouble> g(im.os.voxels(), cdouble{0.0, 0.0});
  std::vector<cdouble> spectrum(im.os.voxels());

  // deapodize and embed centered
  const int x0 = im.os.nx / 2 - im.grid.nx / 2;
  const int y0 = im.os.ny / 2 - im.grid.ny / 2;
  for (int iy = 0; iy < im.grid.ny; ++iy) {
    const std::size_t src = static_cast<std::size_t>(iy) * im.grid.nx;
    const std::size_t dst = static_cast<std::size_t>(iy + y0) * im.os.nx + x0;
    for (int ix = 0; ix < im.grid.nx; ++ix) {
      g[dst + ix] = img[src + ix] * im.deapod[src + ix];
    }
  }

  fftw_execute_dft(im.fwd, reinterpret_cast<fftw_complex*>(g.data()),
                   reinterpret_cast<fftw_complex*>(spectrum.data()));

  CVec out(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Stencil s = make_stencil(im, traj.kx[i], traj.ky[i]);
    cdouble acc{0.0, 0.0};
    for (int b = 0; b < s.count_y; ++b) {
      const cdouble* row =
          spectrum.data() + static_cast<std::size_t>(wrap(s.first_y + b, im.os.ny)) * im.os.nx;
      cdouble rowacc{0.0, 0.0};
      for (int a = 0; a < s.count_x; ++a) {
        rowacc += row[wrap(s.first_x + a, im.os.nx)] * s.wx[a];
      }
      acc += rowacc * s.wy[b];
    }
    out[i] = acc;
  }
  return out;
}

CVec nufft_adjoint(const NufftPlan& plan, const CVec& samples, const traj::Trajectory& traj) {
  const auto& im = plan.impl();
  if (samples.size() != traj.size()) throw ArgumentError("samples do not match trajectory");
  check_traj(traj);

  std::vector<cdouble> g(im.os.voxels(), cdouble{0.0, 0.0});
  std::vector<cdouble> spatial(im.os.voxels());

  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Stencil s = make_stencil(im, traj.kx[i], traj.ky[i]);
    const cdouble v = samples[i];
    for (int b = 0; b < s.count_y; ++b) {
      cdouble* row = g.data() + static_cast<std::size_t>(wrap(s.first_y + b, im.os.ny)) * im.os.nx;
      const cdouble vy = v * s.wy[b];
      for (int a = 0; a < s.count_x; ++a) {
        row[wrap(s.first_x + a, im.os.nx)] += vy * s.wx[a];
      }
    }
  }

  fftw_execute_dft(im.bwd, reinterpret_cast<fftw_complex*>(g.data()),
                   reinterpret_cast<fftw_complex*>(spatial.data()));

  CVec out(im.grid.voxels());
  const int x0 = im.os.nx / 2 - im.grid.nx / 2;
  const int y0 = im.os.ny / 2 - im.grid.ny / 2;
  for (int iy = 0; iy < im.grid.ny; ++iy) {
    const std::size_t dst = static_cast<std::size_t>(iy) * im.grid.nx;
    const std::size_t src = static_cast<std::size_t>(iy + y0) * im.os.nx + x0;
    for (int ix = 0; ix < im.grid.nx; ++ix) {
      out[dst + ix] = spatial[src + ix] * im.deapod[dst + ix];
    }
  }
  return out;
}

CVec apply_sqrt_weights(const CVec& samples, const traj::DensityWeights& weights) {
  if (samples.size() != weights.w.size()) {
    throw ArgumentError("weights length does not match samples");
  }
  for (const double w : weights.w) {
    if (!(w >= 0.0)) throw ArgumentError("density weights must be nonnegative");
  }
  RVec root = weights.w;
  kernels::sqrt_real(root.size(), root.data());
  CVec out = samples;
  kernels::mul_real(out.size(), root.data(), out.data());
  return out;
}

}  // namespace recon::nufft
