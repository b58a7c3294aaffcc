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
#include <string>
#include <string_view>
#include <vector>

#include "echo_polar/errors.hpp"
#include "echo_polar/fft.hpp"
#include "echo_polar/fmcw_sim.hpp"
#include "echo_polar/tensor.hpp"

namespace echo_polar {

enum class AxisKind : std::uint32_t {
  fast_time = 0,
  chirp = 1,
  range_bin = 2,
  doppler_bin = 3,
  channel = 4,
  azimuth_bin = 5,
  elevation_bin = 6,
};

enum class Stage : std::uint32_t { RT = 1, RD = 2, READ = 3, RA = 4 };

inline std::string_view to_string(AxisKind k) {
  switch (k) {
    case AxisKind::fast_time: return "fast_time";
    case AxisKind::chirp: return "chirp";
    case AxisKind::range_bin: return "range_bin";
    case AxisKind::doppler_bin: return "doppler_bin";
    case AxisKind::channel: return "channel";
    case AxisKind::azimuth_bin: return "azimuth_bin";
    case AxisKind::elevation_bin: return "elevation_bin";
  }
  return "unknown";
}

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::RT: return "RT";
    case Stage::RD: return "RD";
    case Stage::READ: return "READ";
    case Stage::RA: return "RA";
  }
  return "unknown";
}

struct Axis {
  AxisKind kind;
  std::size_t length;
  double step;       // physical size of one index step
  std::string unit;  // "s", "m", "m/s", "sin"

  bool operator==(const Axis&) const = default;
};

/// Complex grid with axis semantics. Axis layouts per stage:
///   RT   (channel, chirp, range_bin)
///   RD   (channel, range_bin, doppler_bin)
///   READ (azimuth_bin, range_bin, doppler_bin)
///   RA   (range_bin, azimuth_bin), real values stored with zero imaginary part
struct Spectrum {
  Tensor<cplx> data;
  std::vector<Axis> axes;
  Stage stage = Stage::RT;
  double wavelength = 0;
  // Set once the channel axis holds N_Tx * N_Rx virtual antennas.
  bool virtual_channels = false;

  std::size_t axis_index(AxisKind kind) const {
    for (std::size_t i = 0; i < axes.size(); ++i)
      if (axes[i].kind == kind) return i;
    throw ContractViolation("spectrum: no " + std::string(to_string(kind)) + " axis");
  }
  bool has_axis(AxisKind kind) const {
    for (const auto& a : axes)
      if (a.kind == kind) return true;
    return false;
  }
  const Axis& axis(AxisKind kind) const { return axes[axis_index(kind)]; }

  static std::vector<AxisKind> expected_layout(Stage s) {
    switch (s) {
      case Stage::RT: return {AxisKind::channel, AxisKind::chirp, AxisKind::range_bin};
      case Stage::RD: return {AxisKind::channel, AxisKind::range_bin, AxisKind::doppler_bin};
      case Stage::READ: return {AxisKind::azimuth_bin, AxisKind::range_bin, AxisKind::doppler_bin};
      case Stage::RA: return {AxisKind::range_bin, AxisKind::azimuth_bin};
    }
    return {};
  }

  void validate() const {
    require(axes.size() == data.rank(), "spectrum: axis count does not match data rank");
    for (std::size_t i = 0; i < axes.size(); ++i)
      require(axes[i].length == data.extent(i), "spectrum: axis length does not match data shape");
    const auto layout = expected_layout(stage);
    require(layout.size() == axes.size(), "spectrum: axis count inconsistent with stage " +
                                              std::string(to_string(stage)));
    for (std::size_t i = 0; i < layout.size(); ++i)
      require(axes[i].kind == layout[i], "spectrum: axis " + std::to_string(i) + " is " +
                                             std::string(to_string(axes[i].kind)) + ", stage " +
                                             std::string(to_string(stage)) + " expects " +
                                             std::string(to_string(layout[i])));
  }
};

inline void require_stage(const Spectrum& s, Stage expected, std::string_view op) {
  if (s.stage != expected)
    throw ContractViolation(std::string(op) + ": expected stage " + std::string(to_string(expected)) +
                            ", got " + std::string(to_string(s.stage)));
  s.validate();
}

enum class WindowKind : std::uint32_t { rectangular = 0, hann = 1, hamming = 2 };

struct WindowSpec {
  WindowKind kind = WindowKind::hann;
  AxisKind axis = AxisKind::fast_time;
};

/// Periodic (DFT-even) window coefficients.
inline std::vector<double> window_coefficients(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double two_pi_over_n = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(two_pi_over_n * static_cast<double>(i));
    switch (kind) {
      case WindowKind::rectangular: break;
      case WindowKind::hann: w[i] = 0.5 - 0.5 * c; break;
      case WindowKind::hamming: w[i] = 0.54 - 0.46 * c; break;
    }
  }
  return w;
}

namespace detail {
inline std::vector<double> window_for(const WindowSpec& window, AxisKind axis, std::size_t n,
                                      std::string_view op) {
  if (window.axis != axis)
    throw ContractViolation(std::string(op) + ": window applies to " + std::string(to_string(window.axis)) +
                            ", transform runs along " + std::string(to_string(axis)));
  if (window.kind == WindowKind::rectangular) return {};
  return window_coefficients(window.kind, n);
}
}  // namespace detail

/// Range FFT along fast time for every (channel, chirp). Unnormalized.
inline Spectrum range_fft(const AdcCube& adc, const WindowSpec& window = {WindowKind::hann, AxisKind::fast_time}) {
  const auto& cfg = adc.config;
  require(adc.data.rank() == 3, "range_fft: ADC cube must be rank 3");
  require(adc.data.extent(0) == cfg.n_rx && adc.data.extent(1) == cfg.n_chirps &&
              adc.data.extent(2) == cfg.n_samples,
          "range_fft: cube shape " + shape_string(adc.data.shape()) + " does not match config");
  require(cfg.n_samples >= 2, "range_fft: need at least 2 samples per chirp");
  const auto w = detail::window_for(window, AxisKind::fast_time, cfg.n_samples, "range_fft");

  Spectrum out;
  out.data = fft_along(adc.data, 2, cfg.n_samples, w);
  out.axes = {
      {AxisKind::channel, cfg.n_rx, cfg.effective_rx_spacing(), "m"},
      {AxisKind::chirp, cfg.n_chirps, cfg.chirp_duration, "s"},
      {AxisKind::range_bin, cfg.n_samples, cfg.range_bin_step(), "m"},
  };
  out.stage = Stage::RT;
  out.wavelength = cfg.wavelength();
  return out;
}

/// Doppler FFT along chirps; output (channel, range_bin, doppler_bin).
inline Spectrum doppler_fft(const Spectrum& rt, const WindowSpec& window = {WindowKind::hann, AxisKind::chirp}) {
  require_stage(rt, Stage::RT, "doppler_fft");
  const Axis& chirps = rt.axes[1];
  const auto w = detail::window_for(window, AxisKind::chirp, chirps.length, "doppler_fft");

  Spectrum out;
  out.data = fft_along(permute(rt.data, {0, 2, 1}), 2, chirps.length, w);
  const double dv = rt.wavelength / (2.0 * static_cast<double>(chirps.length) * chirps.step);
  out.axes = {rt.axes[0], rt.axes[2], {AxisKind::doppler_bin, chirps.length, dv, "m/s"}};
  out.stage = Stage::RD;
  out.wavelength = rt.wavelength;
  out.virtual_channels = rt.virtual_channels;
  return out;
}

/// Undoes uniform phase-ramp DDM: Tx k's echo appears shifted by k * N_c / N_Tx
/// Doppler bins. Virtual channel k * N_Rx + m, Doppler bin j (signed within the
/// shortened axis of length L = N_c / N_Tx) reads RD bin (j + k L) mod N_c.
/// Exact for targets with |Doppler| < L / 2 bins.
inline Spectrum ddm_demultiplex(const Spectrum& rd, std::size_t n_tx) {
  require_stage(rd, Stage::RD, "ddm_demultiplex");
  require(!rd.virtual_channels, "ddm_demultiplex: spectrum is already demultiplexed");
  require(n_tx >= 1, "ddm_demultiplex: n_tx must be at least 1");
  const std::size_t n_rx = rd.data.extent(0), n_range = rd.data.extent(1), n_dop = rd.data.extent(2);
  if (n_dop % n_tx != 0)
    throw InputError("ddm_demultiplex: Doppler length " + std::to_string(n_dop) + " not divisible by n_tx " +
                     std::to_string(n_tx));
  const std::size_t seg = n_dop / n_tx;

  Spectrum out = rd;
  out.virtual_channels = true;
  if (n_tx == 1) return out;

  out.data = Tensor<cplx>({n_tx * n_rx, n_range, seg});
  for (std::size_t k = 0; k < n_tx; ++k)
    for (std::size_t m = 0; m < n_rx; ++m)
      for (std::size_t r = 0; r < n_range; ++r)
        for (std::size_t j = 0; j < seg; ++j) {
          const long d = signed_bin(j, seg) + static_cast<long>(k * seg);
          out.data(k * n_rx + m, r, j) = rd.data(m, r, unsigned_bin(d, n_dop));
        }
  out.axes[0].length = n_tx * n_rx;
  out.axes[2].length = seg;
  return out;
}

/// sin(theta) at azimuth bin `bin` of an n_bins angle FFT over elements spaced `spacing`.
inline double azimuth_sine(std::size_t bin, std::size_t n_bins, double spacing, double wavelength) {
  return static_cast<double>(signed_bin(bin, n_bins)) * wavelength / (spacing * static_cast<double>(n_bins));
}

/// Zero-padded angle FFT across virtual channels; output READ
/// (azimuth_bin, range_bin, doppler_bin). Bins are in FFT order.
inline Spectrum angle_fft(const Spectrum& rd, std::size_t n_azimuth_bins) {
  require_stage(rd, Stage::RD, "angle_fft");
  require(rd.virtual_channels, "angle_fft: spectrum has no virtual-channel axis (run ddm_demultiplex)");
  const std::size_t n_ch = rd.data.extent(0);
  if (n_azimuth_bins < n_ch)
    throw InputError("angle_fft: n_azimuth_bins " + std::to_string(n_azimuth_bins) + " below channel count " +
                     std::to_string(n_ch));
  const double spacing = rd.axes[0].step;

  Spectrum out;
  out.data = fft_along(rd.data, 0, n_azimuth_bins);
  out.axes = {{AxisKind::azimuth_bin, n_azimuth_bins,
               rd.wavelength / (spacing * static_cast<double>(n_azimuth_bins)), "sin"},
              rd.axes[1], rd.axes[2]};
  out.stage = Stage::READ;
  out.wavelength = rd.wavelength;
  out.virtual_channels = true;
  return out;
}

/// Sums magnitudes over Doppler into a real (range_bin, azimuth_bin) map.
inline Spectrum compress_to_ra(const Spectrum& read) {
  require_stage(read, Stage::READ, "compress_to_ra");
  const std::size_t n_az = read.data.extent(0), n_range = read.data.extent(1), n_dop = read.data.extent(2);
  Spectrum out;
  out.data = Tensor<cplx>({n_range, n_az});
  for (std::size_t a = 0; a < n_az; ++a)
    for (std::size_t r = 0; r < n_range; ++r) {
      double acc = 0;
      for (std::size_t d = 0; d < n_dop; ++d) acc += std::abs(read.data(a, r, d));
      out.data(r, a) = acc;
    }
  out.axes = {read.axes[1], read.axes[0]};
  out.stage = Stage::RA;
  out.wavelength = read.wavelength;
  out.virtual_channels = read.virtual_channels;
  return out;
}

enum class ComplexMode { IQ, MP };

/// Real feature tensor with the leading axis doubled: entries 2c and 2c+1
/// are (re, im) for IQ or (|z|, arg z) for MP.
inline Tensor<double> complex_to_features(const Tensor<cplx>& z, ComplexMode mode) {
  require(z.rank() >= 1, "complex_to_features: rank-0 input");
  auto shape = z.shape();
  const std::size_t lead = shape[0];
  const std::size_t rest = lead == 0 ? 0 : z.size() / lead;
  shape[0] *= 2;
  Tensor<double> out(shape);
  for (std::size_t c = 0; c < lead; ++c)
    for (std::size_t i = 0; i < rest; ++i) {
      const cplx v = z[c * rest + i];
      const bool iq = mode == ComplexMode::IQ;
      out[(2 * c) * rest + i] = iq ? v.real() : std::abs(v);
      out[(2 * c + 1) * rest + i] = iq ? v.imag() : std::atan2(v.imag(), v.real());
    }
  return out;
}

inline Tensor<double> complex_to_features(const Spectrum& spec, ComplexMode mode) {
  return complex_to_features(spec.data, mode);
}

inline Tensor<cplx> features_to_complex(const Tensor<double>& f, ComplexMode mode) {
  require(f.rank() >= 1 && f.extent(0) % 2 == 0, "features_to_complex: leading axis must be even");
  auto shape = f.shape();
  shape[0] /= 2;
  Tensor<cplx> out(shape);
  const std::size_t rest = shape[0] == 0 ? 0 : out.size() / shape[0];
  for (std::size_t c = 0; c < shape[0]; ++c)
    for (std::size_t i = 0; i < rest; ++i) {
      const double a = f[(2 * c) * rest + i], b = f[(2 * c + 1) * rest + i];
      out[c * rest + i] = mode == ComplexMode::IQ ? cplx(a, b) : std::polar(a, b);
    }
  return out;
}

}  // namespace echo_polar
