#include "recon/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"

namespace recon::reg {

namespace k = recon::kernels;

MotionResolvedImage temporal_diff(const MotionResolvedImage& u) {
  MotionResolvedImage d(u.n_voxels, u.n_states);
  const std::size_t n = u.n_voxels;
  for (std::size_t t = 0; t + 1 < u.n_states; ++t) {
    k::sub(n, u.state(t + 1), u.state(t), d.state(t));
  }
  // last state already zero-initialized
  return d;
}

MotionResolvedImage temporal_diff_adjoint(const MotionResolvedImage& d) {
  MotionResolvedImage a(d.n_voxels, d.n_states);
  const std::size_t n = d.n_voxels;
  const std::size_t T = d.n_states;
  if (T == 1) return a;
  std::memcpy(a.state(0), d.state(0), n * sizeof(cdouble));
  k::scale(n, -1.0, a.state(0));
  for (std::size_t t = 1; t + 1 < T; ++t) {
    k::sub(n, d.state(t - 1), d.state(t), a.state(t));
  }
  std::memcpy(a.state(T - 1), d.state(T - 2), n * sizeof(cdouble));
  return a;
}

double vtv_value(const EchoStack& u, Coupling coupling) {
  u.validate();
  if (coupling == Coupling::l1) {
    double total = 0.0;
    for (const auto& echo : u.echoes) {
      const MotionResolvedImage d = temporal_diff(echo);
      total += k::sum_mag(d.data.size(), d.data.data());
    }
    return total;
  }
  RVec nsq(u.echoes.front().data.size(), 0.0);
  for (const auto& echo : u.echoes) {
    const MotionResolvedImage d = temporal_diff(echo);
    k::add_sq_mag(d.data.size(), d.data.data(), nsq.data());
  }
  return k::sum_sqrt(nsq.size(), nsq.data());
}

namespace {

// Projects the given echo group onto the pointwise ball of radius r. The
// scale factors are recomputed and re-applied until no point exceeds the
// radius, so that projecting an already-projected input multiplies by exactly
// 1.0 everywhere; that makes idempotence bitwise rather than approximate.
void project_group(std::vector<MotionResolvedImage*>& group, double radius) {
  const std::size_t n = group.front()->data.size();
  RVec nsq(n), f(n);
  const double r2 = radius * radius;
  const double just_below_one = std::nextafter(1.0, 0.0);
  for (int pass = 0; pass < 200; ++pass) {
    std::fill(nsq.begin(), nsq.end(), 0.0);
    for (const auto* img : group) k::add_sq_mag(n, img->data.data(), nsq.data());
    k::clip_factors(n, radius, nsq.data(), f.data());
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (nsq[i] > r2) {
        clipped = true;
        // radius/sqrt(nsq) can round up to 1.0 when nsq is barely over the
        // radius; keep the factor strictly contractive so the loop settles
        if (f[i] >= 1.0) f[i] = just_below_one;
      }
    }
    if (!clipped) return;
    for (auto* img : group) k::mul_real(n, f.data(), img->data.data());
  }
  throw NumericError("dual projection failed to settle");
}

}  // namespace

TvDual project_dual(TvDual xi, double lambda, Coupling coupling) {
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be positive");
  xi.validate();
  const double radius = 1.0 / lambda;
  if (coupling == Coupling::l2) {
    std::vector<MotionResolvedImage*> group;
    group.reserve(xi.echoes.size());
    for (auto& e : xi.echoes) group.push_back(&e);
    project_group(group, radius);
  } else {
    for (auto& e : xi.echoes) {
      std::vector<MotionResolvedImage*> group{&e};
      project_group(group, radius);
    }
  }
  return xi;
}

}  // namespace recon::reg
