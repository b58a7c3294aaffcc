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

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "echo_polar/errors.hpp"
#include "echo_polar/tensor.hpp"

namespace echo_polar {

inline constexpr double kSpeedOfLight = 299'792'458.0;

/// FMCW chirp and MIMO array parameters. Defaults describe a 77 GHz sensor
/// whose ADC window spans the whole chirp (N_s / f_s == T_c).
struct RadarConfig {
  double carrier_freq = 77e9;       // Hz
  double bandwidth = 300e6;         // Hz
  double chirp_duration = 25.6e-6;  // s, also the chirp repetition interval
  double sample_rate = 10e6;        // Hz
  std::size_t n_samples = 256;
  std::size_t n_chirps = 128;
  std::size_t n_tx = 1;
  std::size_t n_rx = 4;
  double rx_spacing = 0.0;  // m; 0 selects lambda/2
  double tx_spacing = 0.0;  // m; 0 selects n_rx * rx_spacing (filled virtual ULA)
  bool ddm_enabled = false;
  double noise_power = 0.0;  // linear, per complex sample
  std::uint64_t rng_seed = 0;
  // Optional per-Tx vertical offsets (m). Empty means an azimuth-only array.
  std::vector<double> tx_elevation_offsets;

  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  /// c / 2B.
  double range_resolution() const { return kSpeedOfLight / (2.0 * bandwidth); }
  /// Metres per range-FFT bin; equals range_resolution() when N_s / f_s == T_c.
  double range_bin_step() const {
    return kSpeedOfLight * sample_rate * chirp_duration / (2.0 * bandwidth * static_cast<double>(n_samples));
  }
  double max_range() const { return range_bin_step() * static_cast<double>(n_samples); }
  /// Width of one Doppler bin: lambda / (2 N_c T_c).
  double velocity_resolution() const {
    return wavelength() / (2.0 * static_cast<double>(n_chirps) * chirp_duration);
  }
  double effective_rx_spacing() const { return rx_spacing > 0 ? rx_spacing : wavelength() / 2.0; }
  double effective_tx_spacing() const {
    return tx_spacing > 0 ? tx_spacing : static_cast<double>(n_rx) * effective_rx_spacing();
  }
  std::size_t n_virtual() const { return n_tx * n_rx; }

  void validate() const {
    require_input(carrier_freq > 0, "config: carrier_freq must be positive");
    require_input(bandwidth > 0, "config: bandwidth must be positive");
    require_input(sample_rate > 0, "config: sample_rate must be positive");
    require_input(chirp_duration > 0, "config: chirp_duration must be positive");
    require_input(n_samples >= 2, "config: n_samples must be at least 2");
    require_input(n_chirps >= 1, "config: n_chirps must be at least 1");
    require_input(static_cast<double>(n_samples) / sample_rate <= chirp_duration * (1.0 + 1e-12),
                  "config: sampling window N_s/f_s exceeds chirp duration");
    require_input(n_tx >= 1 && n_rx >= 1, "config: n_tx and n_rx must be at least 1");
    require_input(rx_spacing >= 0 && tx_spacing >= 0, "config: antenna spacings must be nonnegative");
    require_input(noise_power >= 0, "config: noise_power must be nonnegative");
    require_input(tx_elevation_offsets.empty() || tx_elevation_offsets.size() == n_tx,
                  "config: tx_elevation_offsets must list one offset per Tx");
    require_input(!ddm_enabled || n_chirps % n_tx == 0,
                  "config: with DDM the chirp count must be divisible by n_tx");
  }
};

struct PointTarget {
  double range = 0;             // m
  double radial_velocity = 0;   // m/s, positive = receding
  double azimuth = 0;           // rad
  double elevation = 0;         // rad
  double amplitude = 1;         // linear reflectivity
};

struct Scene {
  std::vector<PointTarget> targets;
};

/// Complex IF samples [rx][chirp][fast-time sample].
struct AdcCube {
  Tensor<std::complex<double>> data;
  RadarConfig config;
};

inline void validate_target(const PointTarget& t, const RadarConfig& cfg) {
  require_input(t.range > 0 && t.range < cfg.max_range(),
                "scene: target range " + std::to_string(t.range) + " m outside (0, " +
                    std::to_string(cfg.max_range()) + ") m");
  require_input(std::abs(t.azimuth) < std::numbers::pi / 2, "scene: |azimuth| must be below 90 degrees");
  require_input(t.amplitude > 0, "scene: amplitude must be positive");
  require_input(std::isfinite(t.radial_velocity) && std::isfinite(t.elevation),
                "scene: non-finite target field");
}

/// Ideal point-scatterer FMCW echo under the stop-and-hop model.
///
/// Target i contributes, on rx m, chirp p, sample n and for every Tx k,
///   a * exp(j (2 pi f_b n / f_s + (4 pi v T_c / lambda + ddm_k) p + 4 pi r / lambda
///              + 2 pi (x_k + x_m) sin(theta) / lambda + 2 pi e_k sin(el) / lambda))
/// with f_b = 2 B r / (c T_c) and ddm_k = 2 pi k / N_Tx when DDM is enabled.
/// Noise is circular complex Gaussian of variance noise_power drawn in
/// [m][p][n] order from mt19937_64(rng_seed).
inline AdcCube synthesize_adc(const Scene& scene, const RadarConfig& cfg) {
  cfg.validate();
  for (const auto& t : scene.targets) validate_target(t, cfg);

  using std::numbers::pi;
  const std::size_t n_rx = cfg.n_rx, n_c = cfg.n_chirps, n_s = cfg.n_samples;
  AdcCube cube{Tensor<std::complex<double>>({n_rx, n_c, n_s}), cfg};
  const double lambda = cfg.wavelength();
  const double dx_rx = cfg.effective_rx_spacing();
  const double dx_tx = cfg.effective_tx_spacing();

  std::vector<double> fast_phase(n_s);
  for (const auto& t : scene.targets) {
    const double f_beat = 2.0 * cfg.bandwidth * t.range / (kSpeedOfLight * cfg.chirp_duration);
    const double w_fast = 2.0 * pi * f_beat / cfg.sample_rate;
    const double w_slow = 4.0 * pi * t.radial_velocity * cfg.chirp_duration / lambda;
    const double phase0 = 4.0 * pi * t.range / lambda;
    const double sin_az = std::sin(t.azimuth);
    const double sin_el = std::sin(t.elevation);
    for (std::size_t n = 0; n < n_s; ++n) fast_phase[n] = w_fast * static_cast<double>(n);

    for (std::size_t k = 0; k < cfg.n_tx; ++k) {
      const double w_ddm = cfg.ddm_enabled ? 2.0 * pi * static_cast<double>(k) / static_cast<double>(cfg.n_tx) : 0.0;
      double tx_phase = 2.0 * pi * static_cast<double>(k) * dx_tx * sin_az / lambda;
      if (!cfg.tx_elevation_offsets.empty()) tx_phase += 2.0 * pi * cfg.tx_elevation_offsets[k] * sin_el / lambda;
      for (std::size_t m = 0; m < n_rx; ++m) {
        const double ch_phase = tx_phase + 2.0 * pi * static_cast<double>(m) * dx_rx * sin_az / lambda;
        for (std::size_t p = 0; p < n_c; ++p) {
          const double base = phase0 + ch_phase + (w_slow + w_ddm) * static_cast<double>(p);
          for (std::size_t n = 0; n < n_s; ++n)
            cube.data(m, p, n) += std::polar(t.amplitude, base + fast_phase[n]);
        }
      }
    }
  }

  if (cfg.noise_power > 0) {
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(cfg.noise_power / 2.0));
    for (auto& v : cube.data.flat()) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v += std::complex<double>(re, im);
    }
  }
  return cube;
}

}  // namespace echo_polar
