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

#include <vector>

#include "echo_polar/cfar.hpp"
#include "echo_polar/fmcw_sim.hpp"
#include "echo_polar/spectrum.hpp"

namespace echo_polar {

struct ChainSettings {
  WindowSpec fast_time_window{WindowKind::hann, AxisKind::fast_time};
  WindowSpec slow_time_window{WindowKind::hann, AxisKind::chirp};
  CfarConfig cfar;
  std::size_t n_azimuth_bins = 64;
};

/// Number of Doppler segments the simulator multiplexed Tx antennas into.
inline std::size_t ddm_factor(const RadarConfig& cfg) { return cfg.ddm_enabled ? cfg.n_tx : 1; }

/// RT -> RD -> virtual-channel RD.
inline Spectrum virtual_rd(const Spectrum& rt, const RadarConfig& cfg, const ChainSettings& s) {
  return ddm_demultiplex(doppler_fft(rt, s.slow_time_window), ddm_factor(cfg));
}

/// CFAR peaks on a virtual-channel RD spectrum turned into radar points.
inline std::vector<RadarPoint> point_cloud(const Spectrum& rd, const RadarConfig& cfg, const ChainSettings& s) {
  return points_from_peaks(rd, detect_rd_peaks(rd, s.cfar), cfg, s.n_azimuth_bins);
}

}  // namespace echo_polar
