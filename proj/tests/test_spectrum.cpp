// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "echo_polar/pipeline.hpp"
#include "oracles.hpp"

using namespace echo_polar;
using Catch::Approx;

namespace {

RadarConfig grid_config(std::size_t n_s, std::size_t n_c, std::size_t n_rx, std::size_t n_tx = 1) {
  RadarConfig c;
  c.n_samples = n_s;
  c.n_chirps = n_c;
  c.n_rx = n_rx;
  c.n_tx = n_tx;
  c.ddm_enabled = n_tx > 1;
  c.sample_rate = static_cast<double>(n_s) / c.chirp_duration;
  return c;
}

PointTarget on_grid(const RadarConfig& c, long r_bin, long v_bin, double sin_az, double amp = 1.0) {
  return {static_cast<double>(r_bin) * c.range_bin_step(), static_cast<double>(v_bin) * c.velocity_resolution(),
          std::asin(sin_az), 0.0, amp};
}

const WindowSpec kRectFast{WindowKind::rectangular, AxisKind::fast_time};
const WindowSpec kRectSlow{WindowKind::rectangular, AxisKind::chirp};

template <typename T>
std::size_t argmax_abs(const Tensor<T>& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i]) > std::abs(t[best])) best = i;
  return best;
}

Tensor<cplx> random_cube(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor<cplx> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (auto& v : t.flat()) v = {g(rng), g(rng)};
  return t;
}

}  // namespace

TEST_CASE("all-zero cube gives all-zero spectra") {
  const auto cfg = grid_config(32, 16, 4);
  AdcCube cube{Tensor<cplx>({4, 16, 32}), cfg};
  const auto rt = range_fft(cube);
  for (const auto& v : rt.data.flat()) REQUIRE(v == cplx(0, 0));
  const auto ra = compress_to_ra(angle_fft(virtual_rd(rt, cfg, {}), 16));
  for (const auto& v : ra.data.flat()) REQUIRE(v == cplx(0, 0));
}

TEST_CASE("pure tone under a rectangular window lands in one bin") {
  const auto cfg = grid_config(64, 2, 1);
  AdcCube cube{Tensor<cplx>({1, 2, 64}), cfg};
  const std::size_t k = 11;
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t n = 0; n < 64; ++n)
      cube.data(0, p, n) = std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(k * n) / 64.0);
  const auto rt = range_fft(cube, kRectFast);
  for (std::size_t b = 0; b < 64; ++b) {
    if (b == k) CHECK(std::abs(rt.data(0, 0, b)) == Approx(64.0).epsilon(1e-12));
    else CHECK(std::abs(rt.data(0, 0, b)) < 1e-9);
  }
}

TEST_CASE("each FFT stage matches the direct DFT") {
  const auto cfg = grid_config(64, 64, 4, 2);
  const Scene scene{{on_grid(cfg, 7, 3, 0.25), on_grid(cfg, 20, -5, -0.4, 0.7)}};
  auto cube = synthesize_adc(scene, cfg);
  const auto noise = random_cube(cube.data.shape(), 5);
  for (std::size_t i = 0; i < cube.data.size(); ++i) cube.data[i] += 0.1 * noise[i];

  const auto rt = range_fft(cube);
  const auto rt_ref = oracle::range_dft(cube.data, oracle::hann(64));
  CHECK(oracle::max_abs_diff(rt.data, rt_ref) <= 1e-9 * oracle::max_abs(rt_ref));

  const auto rd = doppler_fft(rt);
  const auto rd_ref = oracle::doppler_dft(rt_ref, oracle::hann(64));
  CHECK(oracle::max_abs_diff(rd.data, rd_ref) <= 1e-9 * oracle::max_abs(rd_ref));

  const auto vrd = ddm_demultiplex(rd, 2);
  const auto read = angle_fft(vrd, 16);
  const auto read_ref = oracle::angle_dft(vrd.data, 16);
  CHECK(oracle::max_abs_diff(read.data, read_ref) <= 1e-9 * oracle::max_abs(read_ref));
}

TEST_CASE("Parseval holds for every stage with the window energy factored in") {
  const auto cfg = grid_config(32, 16, 8);
  AdcCube cube{random_cube({8, 16, 32}, 17), cfg};
  const auto w_fast = oracle::hann(32), w_slow = oracle::hann(16);
  double e_in = 0;
  for (std::size_t m = 0; m < 8; ++m)
    for (std::size_t p = 0; p < 16; ++p)
      for (std::size_t n = 0; n < 32; ++n) e_in += std::norm(cube.data(m, p, n) * w_fast[n]);
  const auto rt = range_fft(cube);
  CHECK(oracle::energy(rt.data) == Approx(32.0 * e_in).epsilon(1e-9));

  double e_rt = 0;
  for (std::size_t m = 0; m < 8; ++m)
    for (std::size_t p = 0; p < 16; ++p)
      for (std::size_t r = 0; r < 32; ++r) e_rt += std::norm(rt.data(m, p, r) * w_slow[p]);
  const auto rd = ddm_demultiplex(doppler_fft(rt), 1);
  CHECK(oracle::energy(rd.data) == Approx(16.0 * e_rt).epsilon(1e-9));

  // Zero padding to N_az bins scales energy by N_az.
  const auto read = angle_fft(rd, 8);
  CHECK(oracle::energy(read.data) == Approx(8.0 * oracle::energy(rd.data)).epsilon(1e-9));
}

TEST_CASE("range and Doppler peaks of on-grid targets") {
  const auto cfg = grid_config(64, 32, 1);
  auto peak_of = [&](long r_bin, long v_bin) {
    const auto rd = doppler_fft(range_fft(synthesize_adc(Scene{{on_grid(cfg, r_bin, v_bin, 0)}}, cfg)));
    const std::size_t flat = argmax_abs(rd.data);
    return std::pair{flat / 32 % 64, flat % 32};
  };
  CHECK(peak_of(7, 0) == std::pair<std::size_t, std::size_t>{7, 0});
  CHECK(peak_of(9, 3) == std::pair<std::size_t, std::size_t>{9, 3});
  CHECK(peak_of(9, -1) == std::pair<std::size_t, std::size_t>{9, 31});
}

TEST_CASE("Doppler axis carries the velocity resolution") {
  const auto cfg = grid_config(32, 16, 2);
  const auto rd = doppler_fft(range_fft(AdcCube{Tensor<cplx>({2, 16, 32}), cfg}));
  CHECK(rd.axes[2].step == Approx(cfg.velocity_resolution()).epsilon(1e-15));
  CHECK(rd.axes[1].step == Approx(cfg.range_bin_step()).epsilon(1e-15));
}

TEST_CASE("DDM demultiplex") {
  const auto cfg = grid_config(32, 32, 4, 2);
  const auto rd = doppler_fft(range_fft(synthesize_adc(Scene{{on_grid(cfg, 5, 0, 0.3)}}, cfg)));

  SECTION("n_tx = 1 is the identity") {
    const auto same = ddm_demultiplex(rd, 1);
    CHECK(same.data == rd.data);
    CHECK(same.virtual_channels);
  }
  SECTION("static target peaks at Doppler 0 in both Tx groups") {
    const auto v = ddm_demultiplex(rd, 2);
    REQUIRE(v.data.shape() == std::vector<std::size_t>{8, 32, 16});
    for (std::size_t ch = 0; ch < 8; ++ch) {
      std::size_t best = 0;
      for (std::size_t d = 1; d < 16; ++d)
        if (std::abs(v.data(ch, 5, d)) > std::abs(v.data(ch, 5, best))) best = d;
      CHECK(best == 0);
    }
  }
  SECTION("indivisible Doppler length is an input error") { CHECK_THROWS_AS(ddm_demultiplex(rd, 3), InputError); }
  SECTION("stage mismatch names both stages") {
    const auto rt = range_fft(synthesize_adc(Scene{}, cfg));
    try {
      (void)ddm_demultiplex(rt, 2);
      FAIL("expected a contract violation");
    } catch (const ContractViolation& e) {
      CHECK(std::string(e.what()).find("expected stage RD, got RT") != std::string::npos);
    }
  }
}

TEST_CASE("angle FFT bin placement") {
  const auto cfg = grid_config(32, 16, 4, 2);
  auto az_peak = [&](const Scene& s, std::size_t r_bin) {
    const auto read = angle_fft(virtual_rd(range_fft(synthesize_adc(s, cfg)), cfg, {}), 64);
    std::size_t best = 0;
    for (std::size_t a = 1; a < 64; ++a)
      if (std::abs(read.data(a, r_bin, 0)) > std::abs(read.data(best, r_bin, 0))) best = a;
    return signed_bin(best, 64);
  };
  CHECK(az_peak(Scene{{on_grid(cfg, 6, 0, 0.0)}}, 6) == 0);
  CHECK(az_peak(Scene{{on_grid(cfg, 6, 0, 0.5)}}, 6) == 16);
  CHECK(az_peak(Scene{{on_grid(cfg, 6, 0, -0.25)}}, 6) == -8);
  CHECK(azimuth_sine(16, 64, cfg.wavelength() / 2, cfg.wavelength()) == Approx(0.5).epsilon(1e-15));

  SECTION("two targets beyond one beamwidth give two peaks") {
    const Scene s{{on_grid(cfg, 6, 0, -0.5), on_grid(cfg, 6, 0, 0.25)}};
    const auto read = angle_fft(virtual_rd(range_fft(synthesize_adc(s, cfg)), cfg, {}), 64);
    std::vector<long> peaks;
    for (std::size_t a = 0; a < 64; ++a) {
      const double m = std::abs(read.data(a, 6, 0));
      if (m > std::abs(read.data((a + 63) % 64, 6, 0)) && m > std::abs(read.data((a + 1) % 64, 6, 0)) &&
          m > 0.5 * std::abs(read.data(unsigned_bin(8, 64), 6, 0)))
        peaks.push_back(signed_bin(a, 64));
    }
    std::sort(peaks.begin(), peaks.end());
    CHECK(peaks == std::vector<long>{-16, 8});
  }
  SECTION("fewer bins than channels is an input error") {
    const auto rd = virtual_rd(range_fft(synthesize_adc(Scene{}, cfg)), cfg, {});
    CHECK_THROWS_AS(angle_fft(rd, 4), InputError);
  }
}

TEST_CASE("noiseless on-grid global peak equals the analytic bins") {
  const auto cfg = grid_config(64, 32, 4, 2);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> rb(3, 60), vb(-7, 7), ab(-12, 12);
  for (int trial = 0; trial < 10; ++trial) {
    const long r = rb(rng), v = vb(rng), a = ab(rng);
    const auto read = angle_fft(virtual_rd(range_fft(synthesize_adc(Scene{{on_grid(cfg, r, v, a / 32.0)}}, cfg)),
                                           cfg, {}),
                                64);
    const std::size_t flat = argmax_abs(read.data);
    const std::size_t n_r = 64, n_d = 16;
    CHECK(signed_bin(flat / (n_r * n_d), 64) == a);
    CHECK(static_cast<long>(flat / n_d % n_r) == r);
    CHECK(signed_bin(flat % n_d, n_d) == v);
  }
}

TEST_CASE("chain is linear in the input cube") {
  const auto cfg = grid_config(32, 16, 4);
  AdcCube a{random_cube({4, 16, 32}, 1), cfg}, b{random_cube({4, 16, 32}, 2), cfg}, ab{Tensor<cplx>({4, 16, 32}), cfg};
  for (std::size_t i = 0; i < ab.data.size(); ++i) ab.data[i] = a.data[i] + b.data[i];
  const auto ra = doppler_fft(range_fft(a)), rb = doppler_fft(range_fft(b)), rab = doppler_fft(range_fft(ab));
  Tensor<cplx> sum(ra.data.shape());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = ra.data[i] + rb.data[i];
  CHECK(oracle::max_abs_diff(rab.data, sum) <= 1e-12 * oracle::max_abs(sum));
}

TEST_CASE("RA compression") {
  const auto cfg = grid_config(32, 16, 4, 2);
  const auto read = angle_fft(virtual_rd(range_fft(synthesize_adc(Scene{{on_grid(cfg, 9, 0, 0.125)}}, cfg)), cfg, {}), 32);
  const auto ra = compress_to_ra(read);
  REQUIRE(ra.data.shape() == std::vector<std::size_t>{32, 32});
  const std::size_t flat = argmax_abs(ra.data);
  CHECK(flat / 32 == 9);
  CHECK(signed_bin(flat % 32, 32) == 2);
  for (const auto& v : ra.data.flat()) REQUIRE(v.imag() == 0.0);

  SECTION("invariant to permuting Doppler bins") {
    Spectrum shuffled = read;
    const std::size_t n_d = read.data.extent(2);
    for (std::size_t a = 0; a < read.data.extent(0); ++a)
      for (std::size_t r = 0; r < read.data.extent(1); ++r)
        for (std::size_t d = 0; d < n_d; ++d) shuffled.data(a, r, d) = read.data(a, r, n_d - 1 - d);
    const auto ra2 = compress_to_ra(shuffled);
    for (std::size_t i = 0; i < ra.data.size(); ++i)
      CHECK(std::abs(ra2.data[i] - ra.data[i]) <= 1e-12 * std::abs(ra.data[i]) + 1e-300);
  }
  SECTION("requires a READ spectrum") { CHECK_THROWS_AS(compress_to_ra(ra), ContractViolation); }
}

TEST_CASE("complex to real features") {
  Tensor<cplx> z({2, 1}, std::vector<cplx>{{1, 0}, {0, 2}});
  const auto iq = complex_to_features(z, ComplexMode::IQ);
  const auto mp = complex_to_features(z, ComplexMode::MP);
  REQUIRE(iq.shape() == std::vector<std::size_t>{4, 1});
  CHECK(iq.values() == std::vector<double>{1, 0, 0, 2});
  CHECK(mp[0] == 1.0);
  CHECK(mp[1] == 0.0);
  CHECK(mp[2] == 2.0);
  CHECK(mp[3] == Approx(std::numbers::pi / 2).epsilon(1e-15));

  const auto r = random_cube({3, 4, 5}, 9);
  const auto back = features_to_complex(complex_to_features(r, ComplexMode::MP), ComplexMode::MP);
  const auto again = complex_to_features(back, ComplexMode::MP);
  const auto first = complex_to_features(r, ComplexMode::MP);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(std::abs(again[i] - first[i]) <= 1e-12);
  CHECK(features_to_complex(complex_to_features(r, ComplexMode::IQ), ComplexMode::IQ) == r);
}

TEST_CASE("window coefficients are periodic") {
  const auto h = window_coefficients(WindowKind::hann, 8);
  CHECK(h[0] == 0.0);
  CHECK(h[4] == Approx(1.0).epsilon(1e-15));
  const auto m = window_coefficients(WindowKind::hamming, 8);
  CHECK(m[0] == Approx(0.08).epsilon(1e-12));
}
