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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "echo_polar/errors.hpp"
#include "echo_polar/fft.hpp"
#include "echo_polar/fmcw_sim.hpp"
#include "echo_polar/spectrum.hpp"
#include "echo_polar/tensor.hpp"

namespace echo_polar {

struct CellCounts {
  std::size_t range = 0;
  std::size_t doppler = 0;
};

struct CfarConfig {
  CellCounts guard{2, 2};
  CellCounts training{4, 4};
  double threshold_factor = 15.0;
  std::size_t min_peak_separation = 1;  // Chebyshev radius, 0 disables the reduction

  void validate() const {
    require_input(threshold_factor > 1.0, "cfar: threshold factor must exceed 1");
    require_input(training.range + training.doppler > 0, "cfar: training ring is empty");
  }
};

struct CfarPeak {
  std::size_t range_bin;
  std::size_t doppler_bin;
  double power;

  bool operator==(const CfarPeak&) const = default;
};

struct RadarPoint {
  double x, y, z;
  double radial_speed;
  double intensity;
};

/// Training-cell count of an unclamped (interior) window.
inline std::size_t training_cell_count(const CfarConfig& cfg) {
  const std::size_t outer_r = 2 * (cfg.guard.range + cfg.training.range) + 1;
  const std::size_t outer_d = 2 * (cfg.guard.doppler + cfg.training.doppler) + 1;
  return outer_r * outer_d - (2 * cfg.guard.range + 1) * (2 * cfg.guard.doppler + 1);
}

/// CA-CFAR false-alarm probability on i.i.d. exponential cells: (1 + alpha/N)^-N.
inline double ca_cfar_pfa(double alpha, std::size_t n_train) {
  const double n = static_cast<double>(n_train);
  return std::pow(1.0 + alpha / n, -n);
}

/// Threshold factor achieving `pfa` on exponential noise.
inline double ca_cfar_alpha(double pfa, std::size_t n_train) {
  const double n = static_cast<double>(n_train);
  return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

/// Cell-averaging CFAR over a real power grid [range][doppler].
///
/// A cell is flagged when power > alpha * mean(training ring); the window is
/// clamped at the borders. With min_peak_separation > 0, a flagged cell is kept
/// only if no other flagged cell within that Chebyshev radius is stronger
/// (ties go to the lower flat index). Output is sorted by (range, doppler).
inline std::vector<CfarPeak> ca_cfar(const Tensor<double>& power, const CfarConfig& cfg) {
  cfg.validate();
  require(power.rank() == 2, "ca_cfar: power grid must be rank 2");
  const std::size_t n_r = power.extent(0), n_d = power.extent(1);
  const std::size_t span_r = cfg.guard.range + cfg.training.range;
  const std::size_t span_d = cfg.guard.doppler + cfg.training.doppler;
  if (n_r <= 2 * span_r + 1 || n_d <= 2 * span_d + 1)
    throw InputError("ca_cfar: grid " + shape_string(power.shape()) + " too small for the CFAR window");

  std::vector<char> flagged(n_r * n_d, 0);
  for (std::size_t r = 0; r < n_r; ++r) {
    const std::size_t r0 = r >= span_r ? r - span_r : 0, r1 = std::min(n_r - 1, r + span_r);
    for (std::size_t d = 0; d < n_d; ++d) {
      const std::size_t d0 = d >= span_d ? d - span_d : 0, d1 = std::min(n_d - 1, d + span_d);
      double sum = 0;
      std::size_t count = 0;
      for (std::size_t i = r0; i <= r1; ++i) {
        const bool guard_row = (i + cfg.guard.range >= r) && (i <= r + cfg.guard.range);
        for (std::size_t j = d0; j <= d1; ++j) {
          if (guard_row && j + cfg.guard.doppler >= d && j <= d + cfg.guard.doppler) continue;
          sum += power(i, j);
          ++count;
        }
      }
      if (count > 0 && power(r, d) > cfg.threshold_factor * (sum / static_cast<double>(count)))
        flagged[r * n_d + d] = 1;
    }
  }

  std::vector<CfarPeak> peaks;
  const std::size_t sep = cfg.min_peak_separation;
  for (std::size_t r = 0; r < n_r; ++r)
    for (std::size_t d = 0; d < n_d; ++d) {
      if (!flagged[r * n_d + d]) continue;
      const double p = power(r, d);
      bool is_max = true;
      if (sep > 0) {
        const std::size_t r0 = r >= sep ? r - sep : 0, r1 = std::min(n_r - 1, r + sep);
        const std::size_t d0 = d >= sep ? d - sep : 0, d1 = std::min(n_d - 1, d + sep);
        for (std::size_t i = r0; i <= r1 && is_max; ++i)
          for (std::size_t j = d0; j <= d1; ++j) {
            if ((i == r && j == d) || !flagged[i * n_d + j]) continue;
            const double q = power(i, j);
            if (q > p || (q == p && i * n_d + j < r * n_d + d)) {
              is_max = false;
              break;
            }
          }
      }
      if (is_max) peaks.push_back({r, d, p});
    }
  return peaks;
}

/// Noncoherent power sum over channels: [range][doppler] = sum_c |RD(c, r, d)|^2.
inline Tensor<double> rd_power(const Spectrum& rd) {
  require_stage(rd, Stage::RD, "rd_power");
  const std::size_t n_c = rd.data.extent(0), n_r = rd.data.extent(1), n_d = rd.data.extent(2);
  Tensor<double> p({n_r, n_d});
  for (std::size_t c = 0; c < n_c; ++c)
    for (std::size_t r = 0; r < n_r; ++r)
      for (std::size_t d = 0; d < n_d; ++d) p(r, d) += std::norm(rd.data(c, r, d));
  return p;
}

/// Moves Doppler zero to the grid centre (index L/2) so that the clamped CFAR
/// borders fall at the Doppler ambiguity edge instead of at zero velocity.
inline Tensor<double> center_doppler(const Tensor<double>& power) {
  const std::size_t n_r = power.extent(0), n_d = power.extent(1);
  Tensor<double> out({n_r, n_d});
  for (std::size_t r = 0; r < n_r; ++r)
    for (std::size_t d = 0; d < n_d; ++d) out(r, (d + n_d / 2) % n_d) = power(r, d);
  return out;
}

/// CFAR on the channel-summed RD power with centred Doppler; peaks are
/// reported with FFT-ordered Doppler bins.
inline std::vector<CfarPeak> detect_rd_peaks(const Spectrum& rd, const CfarConfig& cfg) {
  const Tensor<double> centred = center_doppler(rd_power(rd));
  const std::size_t n_d = centred.extent(1);
  auto peaks = ca_cfar(centred, cfg);
  for (auto& p : peaks) p.doppler_bin = (p.doppler_bin + n_d - n_d / 2) % n_d;
  std::sort(peaks.begin(), peaks.end(), [](const CfarPeak& a, const CfarPeak& b) {
    return a.range_bin != b.range_bin ? a.range_bin < b.range_bin : a.doppler_bin < b.doppler_bin;
  });
  return peaks;
}

struct PeakAngle {
  std::size_t azimuth_bin;
  double azimuth;  // rad
};

/// Argmax of the zero-padded angle FFT at one RD cell.
inline PeakAngle peak_azimuth(const Spectrum& rd, std::size_t range_bin, std::size_t doppler_bin,
                              std::size_t n_azimuth_bins) {
  const std::size_t n_ch = rd.data.extent(0);
  std::vector<cplx> snapshot(n_azimuth_bins);
  for (std::size_t c = 0; c < n_ch; ++c) snapshot[c] = rd.data(c, range_bin, doppler_bin);
  const auto spectrum = fft(snapshot);
  std::size_t best = 0;
  for (std::size_t b = 1; b < n_azimuth_bins; ++b)
    if (std::norm(spectrum[b]) > std::norm(spectrum[best])) best = b;
  const double s = std::clamp(azimuth_sine(best, n_azimuth_bins, rd.axes[0].step, rd.wavelength), -1.0, 1.0);
  return {best, std::asin(s)};
}

/// One point per peak; angle FFT runs only on the peak cells. Elevation is 0
/// because the default array has no vertical aperture.
inline std::vector<RadarPoint> points_from_peaks(const Spectrum& rd, const std::vector<CfarPeak>& peaks,
                                                 const RadarConfig& config, std::size_t n_azimuth_bins) {
  require_stage(rd, Stage::RD, "points_from_peaks");
  require(rd.virtual_channels, "points_from_peaks: spectrum has no virtual-channel axis");
  if (n_azimuth_bins < rd.data.extent(0))
    throw InputError("points_from_peaks: n_azimuth_bins below channel count");
  const std::size_t n_r = rd.data.extent(1), n_d = rd.data.extent(2);
  const double range_step = rd.axes[1].step;
  const double dv = rd.axes[2].step;

  std::vector<RadarPoint> points;
  points.reserve(peaks.size());
  for (const auto& pk : peaks) {
    require(pk.range_bin < n_r && pk.doppler_bin < n_d, "points_from_peaks: peak outside grid");
    const double range = static_cast<double>(pk.range_bin) * range_step;
    require(range < config.max_range(), "points_from_peaks: peak range beyond the unambiguous range");
    const double speed = static_cast<double>(signed_bin(pk.doppler_bin, n_d)) * dv;
    const double az = peak_azimuth(rd, pk.range_bin, pk.doppler_bin, n_azimuth_bins).azimuth;
    const double el = 0.0;
    points.push_back({range * std::cos(az) * std::cos(el), range * std::sin(az) * std::cos(el),
                      range * std::sin(el), speed, pk.power});
  }
  return points;
}

}  // namespace echo_polar
