#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "recon/errors.hpp"

namespace recon {

using cdouble = std::complex<double>;
using CVec = std::vector<cdouble>;
using RVec = std::vector<double>;

// Regular image grid, row-major storage img[y*nx + x].
struct Grid2 {
  int nx = 0;
  int ny = 0;

  std::size_t voxels() const { return static_cast<std::size_t>(nx) * ny; }
  bool operator==(const Grid2&) const = default;
};

// Complex image series over N voxels x T motion states. State t occupies the
// contiguous slice data[t*N .. (t+1)*N).
struct MotionResolvedImage {
  std::size_t n_voxels = 0;
  int n_states = 0;
  CVec data;

  MotionResolvedImage() = default;
  MotionResolvedImage(std::size_t n, int t)
      : n_voxels(n), n_states(t), data(n * static_cast<std::size_t>(t), cdouble{0.0, 0.0}) {
    if (n == 0 || t < 1) throw ArgumentError("MotionResolvedImage: need n_voxels > 0, T >= 1");
  }

  cdouble* state(int t) { return data.data() + static_cast<std::size_t>(t) * n_voxels; }
  const cdouble* state(int t) const { return data.data() + static_cast<std::size_t>(t) * n_voxels; }
  std::size_t size() const { return data.size(); }
};

// One MotionResolvedImage per echo, all with identical (N, T).
struct EchoStack {
  std::vector<MotionResolvedImage> echoes;

  int num_echoes() const { return static_cast<int>(echoes.size()); }
  std::size_t n_voxels() const { return echoes.empty() ? 0 : echoes.front().n_voxels; }
  int n_states() const { return echoes.empty() ? 0 : echoes.front().n_states; }

  void validate() const {
    if (echoes.empty()) throw ArgumentError("EchoStack: need at least one echo");
    for (const auto& e : echoes)
      if (e.n_voxels != n_voxels() || e.n_states != n_states())
        throw ArgumentError("EchoStack: echo shapes differ");
  }
};

}  // namespace recon
