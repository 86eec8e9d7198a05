#include "recon/quantify.hpp"

#include <algorithm>
#include <cmath>

#include "recon/errors.hpp"
#include "recon/threading.hpp"

namespace recon::quant {

namespace {

double percentile(RVec values, double q) {
  if (values.empty()) return 0.0;
  const double rank = std::ceil(q * double(values.size())) - 1.0;
  const std::size_t idx = rank <= 0.0 ? 0 : std::min(values.size() - 1, std::size_t(rank));
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

struct VoxelFit {
  double rho = 0.0;
  double r_per_ms = 0.0;  // decay rate in the TE unit (ms)
  bool ok = false;
};

constexpr double kMaxRatePerMs = 5.0;  // 5000 s^-1

double sse_of(const double* m, const double* te, std::size_t e, double rho, double r) {
  double s = 0.0;
  for (std::size_t k = 0; k < e; ++k) {
    const double d = rho * std::exp(-r * te[k]) - m[k];
    s += d * d;
  }
  return s;
}

VoxelFit fit_voxel(const double* m, const double* te, std::size_t e) {
  // log-linear init over strictly positive magnitudes
  double sx = 0, sz = 0, sxx = 0, sxz = 0;
  std::size_t cnt = 0;
  for (std::size_t k = 0; k < e; ++k) {
    if (!(m[k] > 0.0)) continue;
    const double z = std::log(m[k]);
    sx += te[k];
    sz += z;
    sxx += te[k] * te[k];
    sxz += te[k] * z;
    ++cnt;
  }
  VoxelFit fit;
  if (cnt < 2) return fit;
  const double n = double(cnt);
  const double den = sxx - sx * sx / n;
  if (!(den > 0.0)) return fit;
  const double slope = (sxz - sx * sz / n) / den;
  double r = std::clamp(-slope, 0.0, kMaxRatePerMs);
  double rho = std::exp((sz - slope * sx) / n);

  // damped Gauss-Newton on f(te) = rho * exp(-r * te)
  double sse = sse_of(m, te, e, rho, r);
  double mu = 1e-10;
  for (int it = 0; it < 20; ++it) {
    double a11 = 0, a12 = 0, a22 = 0, g1 = 0, g2 = 0;
    for (std::size_t k = 0; k < e; ++k) {
      const double ex = std::exp(-r * te[k]);
      const double f = rho * ex;
      const double res = f - m[k];
      const double jr = -rho * te[k] * ex;  // d f / d r
      a11 += ex * ex;
      a12 += ex * jr;
      a22 += jr * jr;
      g1 += ex * res;
      g2 += jr * res;
    }
    bool stepped = false;
    for (int damp = 0; damp < 8; ++damp) {
      const double d11 = a11 * (1.0 + mu), d22 = a22 * (1.0 + mu);
      const double det = d11 * d22 - a12 * a12;
      if (!(std::abs(det) > 0.0)) break;
      const double drho = (-g1 * d22 + g2 * a12) / det;
      const double dr = (-g2 * d11 + g1 * a12) / det;
      const double rho_t = std::max(0.0, rho + drho);
      const double r_t = std::clamp(r + dr, 0.0, kMaxRatePerMs);
      const double sse_t = sse_of(m, te, e, rho_t, r_t);
      if (sse_t <= sse) {
        const bool converged = std::abs(rho_t - rho) <= 1e-12 * (1.0 + rho) &&
                               std::abs(r_t - r) <= 1e-12 * (1.0 + r);
        rho = rho_t;
        r = r_t;
        sse = sse_t;
        mu = std::max(mu / 3.0, 1e-12);
        stepped = true;
        if (converged) it = 20;
        break;
      }
      mu *= 10.0;
    }
    if (!stepped) break;
  }
  fit.rho = rho;
  fit.r_per_ms = r;
  fit.ok = true;
  return fit;
}

}  // namespace

R2StarMap fit_r2star(const std::vector<RVec>& magnitudes, const RVec& te_ms) {
  if (magnitudes.size() < 2) throw ArgumentError("need at least two echoes");
  if (te_ms.size() != magnitudes.size())
    throw ArgumentError("echo time count does not match image count");
  for (std::size_t k = 1; k < te_ms.size(); ++k)
    if (!(te_ms[k] > te_ms[k - 1])) throw ArgumentError("echo times must be strictly increasing");
  const std::size_t n = magnitudes[0].size();
  if (n == 0) throw ArgumentError("empty images");
  for (const auto& img : magnitudes)
    if (img.size() != n) throw ArgumentError("echo image sizes differ");

  const double floor_val = 0.05 * percentile(magnitudes[0], 0.99);
  const std::size_t e = magnitudes.size();

  R2StarMap map;
  map.r2star.assign(n, 0.0);
  map.rho.assign(n, 0.0);
  map.mask.assign(n, 0);
  threads::parallel_for(n, [&](std::size_t i) {
    if (!(magnitudes[0][i] > floor_val) || !(magnitudes[0][i] > 0.0)) return;
    double m[64];
    const std::size_t ke = std::min<std::size_t>(e, 64);
    for (std::size_t k = 0; k < ke; ++k) m[k] = magnitudes[k][i];
    const VoxelFit fit = fit_voxel(m, te_ms.data(), ke);
    if (!fit.ok) return;
    map.r2star[i] = fit.r_per_ms * 1000.0;  // per-ms rate to s^-1
    map.rho[i] = fit.rho;
    map.mask[i] = 1;
  });
  return map;
}

RVec rss_combine(const std::vector<CVec>& echoes) {
  if (echoes.empty()) throw ArgumentError("need at least one echo");
  const std::size_t n = echoes[0].size();
  for (const auto& u : echoes)
    if (u.size() != n) throw ArgumentError("echo image sizes differ");
  RVec out(n, 0.0);
  for (const auto& u : echoes)
    for (std::size_t i = 0; i < n; ++i) out[i] += std::norm(u[i]);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(out[i]);
  return out;
}

RVec gradient_magnitude(const RVec& img, Grid2 grid) {
  if (img.size() != grid.voxels()) throw ArgumentError("image does not match grid");
  RVec out(img.size());
  const int nx = grid.nx, ny = grid.ny;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const auto at = [&](int xx, int yy) {
        xx = std::clamp(xx, 0, nx - 1);
        yy = std::clamp(yy, 0, ny - 1);
        return img[std::size_t(yy) * nx + xx];
      };
      const double gx = 0.5 * (at(x + 1, y) - at(x - 1, y));
      const double gy = 0.5 * (at(x, y + 1) - at(x, y - 1));
      out[std::size_t(y) * nx + x] = std::hypot(gx, gy);
    }
  return out;
}

RoiReport roi_stats(std::span<const RVec> slices, Grid2 grid, const Roi& roi) {
  if (slices.empty()) throw ArgumentError("need at least one slice");
  if (roi.radius < 1.0) throw ArgumentError("ROI radius must be >= 1");
  if (roi.cx - roi.radius < 0 || roi.cx + roi.radius > grid.nx - 1 || roi.cy - roi.radius < 0 ||
      roi.cy + roi.radius > grid.ny - 1)
    throw ArgumentError("ROI extends outside the image");
  for (const auto& s : slices)
    if (s.size() != grid.voxels()) throw ArgumentError("slice does not match grid");

  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  const double r2 = roi.radius * roi.radius;
  for (int y = 0; y < grid.ny; ++y)
    for (int x = 0; x < grid.nx; ++x) {
      const double dx = x - roi.cx, dy = y - roi.cy;
      if (dx * dx + dy * dy > r2) continue;
      for (const auto& s : slices) {
        const double v = s[std::size_t(y) * grid.nx + x];
        sum += v;
        sum2 += v * v;
        ++count;
      }
    }
  if (count == 0) throw ArgumentError("empty ROI");
  RoiReport rep;
  rep.count = count;
  rep.mean = sum / double(count);
  const double var = std::max(0.0, sum2 / double(count) - rep.mean * rep.mean);
  rep.stddev = std::sqrt(var);
  return rep;
}

RoiReport roi_stats(const RVec& map, Grid2 grid, const Roi& roi) {
  return roi_stats(std::span<const RVec>(&map, 1), grid, roi);
}

Regression concentration_regression(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw ArgumentError("need at least two points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  const double n = double(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("degenerate regression: all x values equal");
  Regression reg;
  reg.slope = sxy / sxx;
  reg.intercept = my - reg.slope * mx;
  double ssr = 0.0;
  for (const auto& [x, y] : points) {
    const double d = y - (reg.slope * x + reg.intercept);
    ssr += d * d;
  }
  reg.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return reg;
}

BlandAltman bland_altman(const RVec& values, const RVec& reference) {
  if (values.size() != reference.size() || values.empty())
    throw ArgumentError("value/reference lengths must match and be nonempty");
  BlandAltman ba;
  ba.percent_diff.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (reference[i] == 0.0) throw ArgumentError("zero reference value");
    ba.percent_diff[i] = (values[i] - reference[i]) / reference[i] * 100.0;
  }
  double s = 0.0;
  for (const double d : ba.percent_diff) s += d;
  ba.bias = s / double(values.size());
  double v = 0.0;
  for (const double d : ba.percent_diff) v += (d - ba.bias) * (d - ba.bias);
  const double sd = std::sqrt(v / double(values.size()));
  ba.lo = ba.bias - 1.96 * sd;
  ba.hi = ba.bias + 1.96 * sd;
  return ba;
}

namespace {

// location and height of the strongest |d/dy| peak along one column
std::pair<double, double> column_edge(const RVec& img, Grid2 grid, int x) {
  const int ny = grid.ny;
  RVec d(ny);
  for (int y = 0; y < ny; ++y) {
    const int yp = std::min(y + 1, ny - 1), ym = std::max(y - 1, 0);
    d[y] = std::abs(0.5 * (img[std::size_t(yp) * grid.nx + x] - img[std::size_t(ym) * grid.nx + x]));
  }
  int best = 0;
  for (int y = 1; y < ny; ++y)
    if (d[y] > d[best]) best = y;
  double loc = best;
  if (best > 0 && best < ny - 1) {
    const double denom = d[best - 1] - 2.0 * d[best] + d[best + 1];
    if (denom < -1e-12) loc += 0.5 * (d[best - 1] - d[best + 1]) / denom;
  }
  return {loc, d[best]};
}

}  // namespace

double edge_misalignment(std::span<const RVec> channels, Grid2 grid) {
  if (channels.size() < 2) throw ArgumentError("need at least two channels");
  for (const auto& c : channels)
    if (c.size() != grid.voxels()) throw ArgumentError("channel does not match grid");
  const std::size_t nc = channels.size();
  std::vector<RVec> locs(nc, RVec(grid.nx));
  RVec strength(grid.nx);  // weakest channel per column
  for (int x = 0; x < grid.nx; ++x) {
    double weakest = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      const auto [loc, s] = column_edge(channels[c], grid, x);
      locs[c][x] = loc;
      weakest = c == 0 ? s : std::min(weakest, s);
    }
    strength[x] = weakest;
  }
  const double thr = 0.5 * *std::max_element(strength.begin(), strength.end());
  if (!(thr > 0.0)) throw ArgumentError("no edges found");
  double total = 0.0;
  std::size_t count = 0;
  for (int x = 0; x < grid.nx; ++x) {
    if (strength[x] < thr) continue;
    for (std::size_t a = 0; a < nc; ++a)
      for (std::size_t b = a + 1; b < nc; ++b) {
        total += std::abs(locs[a][x] - locs[b][x]);
        ++count;
      }
  }
  return total / double(count);
}

RVec vertical_profile(const RVec& img, Grid2 grid, int column) {
  if (img.size() != grid.voxels()) throw ArgumentError("image does not match grid");
  if (column < 0 || column >= grid.nx) throw ArgumentError("column out of range");
  RVec out(grid.ny);
  for (int y = 0; y < grid.ny; ++y) out[y] = img[std::size_t(y) * grid.nx + column];
  return out;
}

}  // namespace recon::quant
