#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <set>
#include <vector>

#include "recon/errors.hpp"
#include "recon/kernels.hpp"
#include "recon/nufft.hpp"
#include "recon/quantify.hpp"
#include "recon/simulation.hpp"
#include "recon/trajectory.hpp"
#include "recon/types.hpp"

using recon::cdouble;
using recon::CVec;
using recon::Grid2;
using recon::RVec;
namespace sim = recon::sim;
namespace traj = recon::traj;
namespace quant = recon::quant;
namespace fs = std::filesystem;

namespace {

bool bit_equal(const RVec& a, const RVec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bit_equal(const CVec& a, const CVec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(cdouble)) == 0;
}

// 10 readouts x 3 samples with distinguishable coordinates per readout
traj::Trajectory toy_traj() {
  traj::Trajectory t;
  for (std::uint32_t r = 0; r < 10; ++r)
    for (int s = 0; s < 3; ++s) {
      t.kx.push_back(-0.4 + 0.08 * r + 0.01 * s);
      t.ky.push_back(0.3 - 0.07 * r);
      t.readout.push_back(r);
    }
  return t;
}

sim::SampleStream toy_stream(int n_echoes, int n_coils) {
  sim::SampleStream s;
  s.grid = {16, 16};
  s.traj = toy_traj();
  for (int k = 0; k < n_echoes; ++k) s.te_ms.push_back(1.0 + k);
  s.n_coils = n_coils;
  s.seed = 99;
  s.samples.resize(std::size_t(n_echoes) * n_coils);
  for (std::size_t idx = 0; idx < s.samples.size(); ++idx) {
    s.samples[idx].resize(s.traj.size());
    for (std::size_t i = 0; i < s.traj.size(); ++i)
      s.samples[idx][i] = {double(s.traj.readout[i]), double(idx)};
  }
  return s;
}

}  // namespace

TEST_CASE("rgb phantom layers plateau, pedestal, and disk with fixed values") {
  const Grid2 g{64, 64};
  const auto ph = sim::make_rgb_phantom(g);
  ph.validate();
  const auto at = [&](const RVec& c, int x, int y) { return c[std::size_t(y) * g.nx + x]; };

  CHECK(at(ph.r, 32, 28) == 0.95);  // plateau
  CHECK(at(ph.g, 32, 28) == 0.85);
  CHECK(at(ph.b, 32, 28) == 0.75);
  CHECK(at(ph.r, 32, 45) == 0.40);  // pedestal below the plateau
  CHECK(at(ph.g, 32, 45) == 0.35);
  CHECK(at(ph.b, 32, 45) == 0.30);
  CHECK(at(ph.r, 32, 10) == 0.30);  // disk
  CHECK(at(ph.r, 2, 2) == 0.0);     // background

  CHECK(&ph.channel(0) == &ph.r);
  CHECK(&ph.channel(1) == &ph.g);
  CHECK(&ph.channel(2) == &ph.b);
  CHECK_THROWS_AS(ph.channel(3), recon::ArgumentError);
  CHECK_THROWS_AS(sim::make_rgb_phantom(Grid2{8, 8}), recon::ArgumentError);
}

TEST_CASE("the plateau top is the strongest vertical edge in every channel") {
  const Grid2 g{64, 64};
  const auto ph = sim::make_rgb_phantom(g);
  const RVec* chans[3] = {&ph.r, &ph.g, &ph.b};
  for (const RVec* c : chans) {
    double best = 0.0;
    int best_y = -1;
    const int x = 32;
    for (int y = 1; y < g.ny - 1; ++y) {
      const double d =
          std::abs(0.5 * ((*c)[std::size_t(y + 1) * g.nx + x] - (*c)[std::size_t(y - 1) * g.nx + x]));
      if (d > best) {
        best = d;
        best_y = y;
      }
    }
    CHECK(best_y == 18);  // row before the first plateau row, shared by all channels
  }
  const RVec all[3] = {ph.r, ph.g, ph.b};
  CHECK(quant::edge_misalignment(std::span<const RVec>(all, 3), g) == 0.0);
}

TEST_CASE("channel shifts compose, invert, and respect the guard limit") {
  const Grid2 g{64, 64};
  const auto ph = sim::make_rgb_phantom(g);
  const auto same = sim::shift_channels(ph, 0, 0);
  CHECK(bit_equal(same.g, ph.g));
  CHECK(bit_equal(same.b, ph.b));

  const auto moved = sim::shift_channels(ph, 5, -7);
  CHECK(moved.g_shift == 5);
  CHECK(moved.b_shift == -7);
  CHECK(!bit_equal(moved.g, ph.g));
  // circular shift is a row permutation: totals are exactly preserved
  CHECK(std::accumulate(moved.g.begin(), moved.g.end(), 0.0) ==
        std::accumulate(ph.g.begin(), ph.g.end(), 0.0));
  const auto back = sim::shift_channels(moved, -5, 7);
  CHECK(bit_equal(back.g, ph.g));
  CHECK(bit_equal(back.b, ph.b));
  CHECK(back.g_shift == 0);

  CHECK_THROWS_AS(sim::shift_channels(ph, 16, 0), recon::ArgumentError);
  CHECK_THROWS_AS(sim::shift_channels(ph, 0, -16), recon::ArgumentError);
}

TEST_CASE("shifting g and b moves the shared edge by the shift amounts") {
  const Grid2 g{128, 128};
  const auto ph = sim::shift_channels(sim::make_rgb_phantom(g), 3, 6);
  const RVec chans[3] = {ph.r, ph.g, ph.b};
  const double m = quant::edge_misalignment(std::span<const RVec>(chans, 3), g);
  // pairwise offsets |0-3|, |0-6|, |3-6| average to 4
  CHECK(m == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("vial ring spaces concentrations evenly and applies the relaxivity line") {
  const Grid2 g{96, 96};
  const auto ph = sim::make_vial_phantom(g, 8, 25.0, 200.0, 20.0, 5.0);
  REQUIRE(ph.vials.size() == 8);
  CHECK(ph.vials[0].concentration_mM == 25.0);
  CHECK(ph.vials[7].concentration_mM == 200.0);
  CHECK(ph.vials[3].concentration_mM == doctest::Approx(25.0 + 175.0 * 3 / 7.0));
  for (const auto& v : ph.vials) {
    CHECK(v.r2star == doctest::Approx(20.0 + 5.0 * v.concentration_mM));
    CHECK(std::hypot(v.cx, v.cy) == doctest::Approx(0.30 * 96));
  }
  CHECK_THROWS_AS(sim::make_vial_phantom(g, 0, 25, 200, 20, 5), recon::ArgumentError);
  CHECK_THROWS_AS(sim::make_vial_phantom(g, 8, -5, 200, 20, 5), recon::ArgumentError);
  CHECK_THROWS_AS(sim::make_vial_phantom(g, 8, 200, 25, 20, 5), recon::ArgumentError);

  sim::VialPhantom bad = ph;
  bad.vials[0].cx = 60.0;  // reaches past the half-FOV guard
  CHECK_THROWS_AS(bad.validate(), recon::ArgumentError);
}

TEST_CASE("rasterization fills vial interiors and keeps partial-volume edges") {
  const Grid2 g{96, 96};
  const auto ph = sim::make_vial_phantom(g, 8, 25.0, 200.0, 20.0, 5.0);
  const RVec rho = sim::rasterize_rho(ph);
  const RVec r2s = sim::rasterize_r2star(ph);

  const auto& v0 = ph.vials[0];
  const int cx = int(std::lround(v0.cx)) + g.nx / 2;
  const int cy = int(std::lround(v0.cy)) + g.ny / 2;
  CHECK(rho[std::size_t(cy) * g.nx + cx] == 1.0);
  CHECK(r2s[std::size_t(cy) * g.nx + cx] == v0.r2star);
  CHECK(rho[2] == 0.0);
  CHECK(r2s[2] == 0.0);

  bool found_partial = false;
  for (const double v : rho)
    if (v > 0.0 && v < 1.0) {
      found_partial = true;
      break;
    }
  CHECK(found_partial);
  for (const double v : r2s) {
    bool legal = v == 0.0;
    for (const auto& vial : ph.vials) legal = legal || v == vial.r2star;
    REQUIRE(legal);  // rate map never blends rates across a boundary
  }
}

TEST_CASE("respiratory surrogate samples the readout clock") {
  const auto sig = sim::synth_resp_signal(1000, 4.0, sim::RespPattern::sinusoid);
  REQUIRE(sig.amplitude.size() == 1000);
  sig.validate();
  CHECK(sig.amplitude[0] == 0.0);
  for (std::size_t i : {std::size_t(1), std::size_t(17), std::size_t(999)}) {
    const double t = double(i) * sim::kReadoutIntervalS;
    CHECK(sig.time_s[i] == t);
    CHECK(sig.amplitude[i] == 1.0 * std::sin(2.0 * M_PI * t / 4.0));
  }
  const double hi = *std::max_element(sig.amplitude.begin(), sig.amplitude.end());
  const double lo = *std::min_element(sig.amplitude.begin(), sig.amplitude.end());
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-3));

  // deep breathing doubles the excursion and halves the rate
  const auto deep = sim::synth_resp_signal(1000, 4.0, sim::RespPattern::deep);
  CHECK(deep.amplitude[100] == 2.0 * std::sin(2.0 * M_PI * deep.time_s[100] / 8.0));

  CHECK_THROWS_AS(sim::synth_resp_signal(0, 4.0, sim::RespPattern::sinusoid),
                  recon::ArgumentError);
  CHECK_THROWS_AS(sim::synth_resp_signal(10, 0.0, sim::RespPattern::sinusoid),
                  recon::ArgumentError);
}

TEST_CASE("amplitude binning splits equal counts and keeps acquisition order") {
  auto stream = toy_stream(2, 1);
  sim::RespSignal resp;
  const double amps[10] = {5, 1, 4, 0, 2, 9, 3, 8, 7, 6};
  for (std::size_t r = 0; r < 10; ++r) {
    resp.amplitude.push_back(amps[r]);
    resp.time_s.push_back(double(r) * sim::kReadoutIntervalS);
  }

  const auto bundle = sim::bin_kspace(stream, resp, 5);
  REQUIRE(bundle.n_states == 5);
  CHECK(bundle.samples_per_readout == 3);
  const std::vector<std::vector<std::uint32_t>> want = {
      {1, 3}, {4, 6}, {0, 2}, {8, 9}, {5, 7}};
  CHECK(bundle.state_readouts == want);

  // state trajectories carry the member readouts' samples in acquisition order
  for (int t = 0; t < 5; ++t) {
    const auto& st = bundle.state_traj[t];
    REQUIRE(st.size() == 6);
    for (std::size_t i = 0; i < st.size(); ++i) {
      const std::uint32_t r = want[t][i / 3];
      CHECK(st.readout[i] == r);
      CHECK(st.kx[i] == stream.traj.kx[r * 3 + i % 3]);
      CHECK(st.ky[i] == stream.traj.ky[r * 3 + i % 3]);
    }
    for (int k = 0; k < 2; ++k) {
      const auto& s = bundle.samples[bundle.sample_index(k, 0, t)];
      for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(s[i] == cdouble{double(want[t][i / 3]), double(k)});
    }
  }
}

TEST_CASE("binning drops leftover readouts from the high-amplitude end") {
  auto stream = toy_stream(1, 1);
  sim::RespSignal resp;
  const double amps[10] = {5, 1, 4, 0, 2, 9, 3, 8, 7, 6};
  for (std::size_t r = 0; r < 10; ++r) {
    resp.amplitude.push_back(amps[r]);
    resp.time_s.push_back(double(r) * sim::kReadoutIntervalS);
  }
  const auto bundle = sim::bin_kspace(stream, resp, 3);
  std::set<std::uint32_t> used;
  for (const auto& members : bundle.state_readouts) used.insert(members.begin(), members.end());
  CHECK(used.size() == 9);
  CHECK(used.count(5) == 0);  // readout 5 has the largest amplitude
}

TEST_CASE("single-state binning preserves the full acquisition verbatim") {
  auto stream = toy_stream(1, 2);
  sim::RespSignal resp;
  for (std::size_t r = 0; r < 10; ++r) {
    resp.amplitude.push_back(std::sin(double(r)));
    resp.time_s.push_back(double(r) * sim::kReadoutIntervalS);
  }
  const auto bundle = sim::bin_kspace(stream, resp, 1);
  REQUIRE(bundle.n_states == 1);
  CHECK(bundle.state_traj[0].kx == stream.traj.kx);
  CHECK(bundle.state_traj[0].ky == stream.traj.ky);
  CHECK(bundle.state_traj[0].readout == stream.traj.readout);
  for (std::size_t idx = 0; idx < stream.samples.size(); ++idx)
    CHECK(bit_equal(bundle.samples[idx], stream.samples[idx]));
}

TEST_CASE("binning rejects mismatched inputs") {
  auto stream = toy_stream(1, 1);
  sim::RespSignal resp;
  for (std::size_t r = 0; r < 9; ++r) {  // one readout short
    resp.amplitude.push_back(0.1 * r);
    resp.time_s.push_back(double(r) * sim::kReadoutIntervalS);
  }
  CHECK_THROWS_AS(sim::bin_kspace(stream, resp, 2), recon::ArgumentError);
  resp.amplitude.push_back(0.9);
  resp.time_s.push_back(9.0 * sim::kReadoutIntervalS);
  CHECK_THROWS_AS(sim::bin_kspace(stream, resp, 11), recon::ArgumentError);
  CHECK_THROWS_AS(sim::bin_kspace(stream, resp, 0), recon::ArgumentError);
}

TEST_CASE("coil maps are unit-normalized and smooth") {
  const Grid2 g{32, 32};
  const auto maps = sim::gen_coil_maps(4, g);
  REQUIRE(maps.size() == 4);
  for (std::size_t i = 0; i < g.voxels(); ++i) {
    double s = 0.0;
    for (const auto& m : maps) s += std::norm(m[i]);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  }
  for (std::size_t i = 0; i < g.voxels(); ++i) CHECK(maps[0][i].imag() == 0.0);
  for (const auto& m : maps)
    for (int y = 0; y < g.ny; ++y)
      for (int x = 0; x + 1 < g.nx; ++x) {
        const std::size_t i = std::size_t(y) * g.nx + x;
        CHECK(std::abs(m[i + 1] - m[i]) < 0.1);
      }
  CHECK_THROWS_AS(sim::gen_coil_maps(0, g), recon::ArgumentError);
}

TEST_CASE("noiseless samples equal the decayed, coil-weighted phantom spectrum") {
  const Grid2 g{48, 48};
  auto ph = sim::make_vial_phantom(g, 4, 80.0, 80.0, 30.0, 0.0);
  auto t = traj::gen_radial(48, 30, 64, traj::AngleScheme::golden);
  const RVec te{1.0, 2.5};
  const auto coils = sim::gen_coil_maps(2, g);
  const auto [stream, resp] =
      sim::simulate_multiecho_kspace(ph, t, coils, te, sim::MotionModel{}, 0.0, 7);
  for (const double a : resp.amplitude) CHECK(a == 0.0);

  const RVec rho = sim::rasterize_rho(ph);
  const RVec r2s = sim::rasterize_r2star(ph);
  const auto plan = recon::nufft::plan_nufft(g);
  for (int k = 0; k < 2; ++k) {
    CVec img(g.voxels());
    for (std::size_t i = 0; i < img.size(); ++i)
      img[i] = cdouble{rho[i] * std::exp(-r2s[i] * te[k] * 1e-3), 0.0};
    for (int j = 0; j < 2; ++j) {
      CVec weighted(img.size());
      recon::kernels::cmul_to(img.size(), coils[j].data(), img.data(), weighted.data());
      const CVec want = recon::nufft::nufft_forward(plan, weighted, t);
      const auto& got = stream.samples[std::size_t(k) * 2 + j];
      REQUIRE(got.size() == want.size());
      double peak = 0.0;
      for (const auto& v : want) peak = std::max(peak, std::abs(v));
      for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(got[i] - want[i]) <= 1e-12 * peak);
    }
  }

  // vial interiors decay by exp(-r2star * dTE) in the image domain
  const auto& v0 = ph.vials[0];
  const std::size_t center =
      std::size_t(int(std::lround(v0.cy)) + g.ny / 2) * g.nx + int(std::lround(v0.cx)) + g.nx / 2;
  CHECK(rho[center] * std::exp(-r2s[center] * 2.5e-3) / (rho[center] * std::exp(-r2s[center] * 1e-3)) ==
        doctest::Approx(std::exp(-30.0 * 1.5e-3)).epsilon(1e-12));
}

TEST_CASE("motion applies an exact per-readout phase ramp") {
  const Grid2 g{48, 48};
  auto ph = sim::make_vial_phantom(g, 3, 50.0, 150.0, 25.0, 4.0);
  auto t = traj::gen_radial(48, 20, 48, traj::AngleScheme::golden);
  const RVec te{1.2};
  sim::MotionModel motion;
  motion.kind = sim::MotionKind::periodic_translation;
  motion.amplitude_voxels = 4.0;
  motion.period_s = 0.8;
  motion.phase_rad = 0.3;

  const auto coils = sim::gen_coil_maps(1, g);
  const auto [still, resp0] =
      sim::simulate_multiecho_kspace(ph, t, coils, te, sim::MotionModel{}, 0.0, 7);
  const auto [moved, resp1] = sim::simulate_multiecho_kspace(ph, t, coils, te, motion, 0.0, 7);

  for (std::size_t r = 0; r < resp1.amplitude.size(); ++r) {
    CHECK(resp1.amplitude[r] == motion.displacement(double(r) * sim::kReadoutIntervalS));
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = resp1.amplitude[t.readout[i]];
    const double phv = -2.0 * M_PI * t.ky[i] * d;
    const cdouble want = still.samples[0][i] * cdouble{std::cos(phv), std::sin(phv)};
    CHECK(std::abs(moved.samples[0][i] - want) <= 1e-12 * (1.0 + std::abs(want)));
  }
}

TEST_CASE("simulation is bitwise deterministic for a fixed seed") {
  const Grid2 g{32, 32};
  auto ph = sim::make_vial_phantom(g, 5, 40.0, 160.0, 20.0, 5.0);
  auto t = traj::gen_radial(32, 24, 40, traj::AngleScheme::golden);
  sim::MotionModel motion;
  motion.kind = sim::MotionKind::periodic_translation;
  motion.amplitude_voxels = 2.0;
  motion.period_s = 0.5;
  const auto coils = sim::gen_coil_maps(3, g);
  const RVec te{0.5, 1.5, 2.5};

  const auto [a, ra] = sim::simulate_multiecho_kspace(ph, t, coils, te, motion, 0.8, 1234);
  const auto [b, rb] = sim::simulate_multiecho_kspace(ph, t, coils, te, motion, 0.8, 1234);
  REQUIRE(a.samples.size() == 9);
  for (std::size_t idx = 0; idx < a.samples.size(); ++idx)
    CHECK(bit_equal(a.samples[idx], b.samples[idx]));

  const auto [c, rc] = sim::simulate_multiecho_kspace(ph, t, coils, te, motion, 0.8, 1235);
  CHECK(!bit_equal(a.samples[0], c.samples[0]));
}

TEST_CASE("noise streams are keyed by readout, not by buffer layout") {
  const auto full = toy_traj();
  traj::Trajectory prefix;  // first two readouts only
  for (std::size_t i = 0; i < 6; ++i) {
    prefix.kx.push_back(full.kx[i]);
    prefix.ky.push_back(full.ky[i]);
    prefix.readout.push_back(full.readout[i]);
  }
  CVec zf(full.size(), cdouble{0.0, 0.0});
  CVec zp(prefix.size(), cdouble{0.0, 0.0});
  sim::add_noise(zf, full, 1.0, 42, 3);
  sim::add_noise(zp, prefix, 1.0, 42, 3);
  for (std::size_t i = 0; i < zp.size(); ++i) CHECK(zf[i] == zp[i]);

  CVec z2(full.size(), cdouble{0.0, 0.0});
  sim::add_noise(z2, full, 1.0, 42, 4);  // different stream tag
  CHECK(!bit_equal(zf, z2));

  CVec zero(full.size(), cdouble{0.0, 0.0});
  sim::add_noise(zero, full, 0.0, 42, 3);
  for (const auto& v : zero) CHECK(v == cdouble{0.0, 0.0});

  CVec wrong(5);
  CHECK_THROWS_AS(sim::add_noise(wrong, full, 1.0, 42, 3), recon::ArgumentError);
  CHECK_THROWS_AS(sim::add_noise(zf, full, -1.0, 42, 3), recon::ArgumentError);
}

TEST_CASE("noise magnitude matches the requested standard deviation") {
  traj::Trajectory t;
  for (std::uint32_t r = 0; r < 200; ++r)
    for (int s = 0; s < 50; ++s) {
      t.kx.push_back(-0.25);
      t.ky.push_back(0.25);
      t.readout.push_back(r);
    }
  CVec z(t.size(), cdouble{0.0, 0.0});
  sim::add_noise(z, t, 0.7, 5, 1);
  double mean_sq = 0.0;
  for (const auto& v : z) mean_sq += std::norm(v);
  mean_sq /= double(z.size());
  CHECK(std::sqrt(mean_sq) == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("bundles survive a save/load round trip bitwise") {
  const Grid2 g{32, 32};
  auto ph = sim::make_vial_phantom(g, 5, 40.0, 160.0, 20.0, 5.0);
  auto t = traj::gen_radial(32, 25, 40, traj::AngleScheme::golden);
  sim::MotionModel motion;
  motion.kind = sim::MotionKind::periodic_translation;
  motion.amplitude_voxels = 2.0;
  motion.period_s = 0.5;
  const RVec te{0.5, 1.5};
  const auto [stream, resp] = sim::simulate_multiecho_kspace(
      ph, t, sim::gen_coil_maps(2, g), te, motion, 0.5, 77);
  const auto bundle = sim::bin_kspace(stream, resp, 3);

  const fs::path dir = fs::temp_directory_path() / "recon_bundle_roundtrip_test";
  fs::remove_all(dir);
  sim::save_bundle(bundle, dir.string());
  const auto loaded = sim::load_bundle(dir.string());
  fs::remove_all(dir);

  CHECK(loaded.grid == bundle.grid);
  CHECK(loaded.n_coils == bundle.n_coils);
  CHECK(loaded.n_states == bundle.n_states);
  CHECK(bit_equal(loaded.te_ms, bundle.te_ms));
  CHECK(loaded.seed == bundle.seed);
  CHECK(loaded.samples_per_readout == bundle.samples_per_readout);
  CHECK(loaded.state_readouts == bundle.state_readouts);
  REQUIRE(loaded.state_traj.size() == bundle.state_traj.size());
  for (std::size_t s = 0; s < bundle.state_traj.size(); ++s) {
    CHECK(bit_equal(loaded.state_traj[s].kx, bundle.state_traj[s].kx));
    CHECK(bit_equal(loaded.state_traj[s].ky, bundle.state_traj[s].ky));
    CHECK(loaded.state_traj[s].readout == bundle.state_traj[s].readout);
  }
  REQUIRE(loaded.samples.size() == bundle.samples.size());
  for (std::size_t i = 0; i < bundle.samples.size(); ++i)
    CHECK(bit_equal(loaded.samples[i], bundle.samples[i]));
  CHECK(bit_equal(loaded.resp.amplitude, bundle.resp.amplitude));
  CHECK(bit_equal(loaded.resp.time_s, bundle.resp.time_s));
}

TEST_CASE("ragged bundles refuse to serialize") {
  auto stream = toy_stream(1, 1);
  // make readout 9 one sample longer: ragged acquisitions cannot round-trip
  stream.traj.kx.push_back(0.33);
  stream.traj.ky.push_back(-0.11);
  stream.traj.readout.push_back(9);
  stream.samples[0].push_back({1.0, 2.0});
  sim::RespSignal resp;
  for (std::size_t r = 0; r < 10; ++r) {
    resp.amplitude.push_back(0.1 * double(r));
    resp.time_s.push_back(double(r) * sim::kReadoutIntervalS);
  }
  const auto bundle = sim::bin_kspace(stream, resp, 2);
  CHECK(bundle.samples_per_readout == 0);
  const fs::path dir = fs::temp_directory_path() / "recon_bundle_ragged_test";
  CHECK_THROWS_AS(sim::save_bundle(bundle, dir.string()), recon::ArgumentError);
  fs::remove_all(dir);
}
