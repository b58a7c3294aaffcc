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
#include <array>
#include <cmath>
#include <cstddef>

#include "echo_polar/errors.hpp"
#include "echo_polar/polar_geometry.hpp"

namespace echo_polar {

/// Oriented 3D box, Cartesian centre in the radar frame, yaw in (-pi, pi].
struct Box3D {
  double x = 0, y = 0, z = 0;
  double l = 1, w = 1, h = 1;
  double yaw = 0;

  double range() const { return std::hypot(x, y); }
  double azimuth() const { return std::atan2(y, x); }

  static Box3D from_polar(double rho, double phi, double z, double l, double w, double h, double yaw) {
    return {rho * std::cos(phi), rho * std::sin(phi), z, l, w, h, wrap_angle(yaw)};
  }

  bool operator==(const Box3D&) const = default;
};

struct ReferencePoint {
  double rho = 0, phi = 0, z = 0;
};

/// (d_rho, d_phi, d_z, log l, log w, log h, sin(yaw - phi), cos(yaw - phi)).
/// d_phi is an angular difference in radians.
using RegressionTarget = std::array<double, 8>;

inline RegressionTarget encode_box(const Box3D& box, const ReferencePoint& ref) {
  if (!(box.l > 0 && box.w > 0 && box.h > 0)) throw InputError("encode_box: box dimensions must be positive");
  const double rel_yaw = wrap_angle(box.yaw) - ref.phi;
  return {box.range() - ref.rho,
          wrap_angle(box.azimuth() - ref.phi),
          box.z - ref.z,
          std::log(box.l),
          std::log(box.w),
          std::log(box.h),
          std::sin(rel_yaw),
          std::cos(rel_yaw)};
}

/// Inverse of encode_box. The (sin, cos) pair need not be normalised.
inline Box3D decode_box(const RegressionTarget& t, const ReferencePoint& ref) {
  const double rho = ref.rho + t[0];
  const double phi = ref.phi + t[1];
  const double yaw = std::atan2(t[6], t[7]) + ref.phi;
  return Box3D::from_polar(rho, phi, ref.z + t[2], std::exp(t[3]), std::exp(t[4]), std::exp(t[5]), yaw);
}

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

inline constexpr double kFocalEpsilon = 1e-7;

/// Binary focal loss -alpha_t (1 - p_t)^gamma log(p_t); p is clamped to [eps, 1 - eps].
inline double focal_loss(double p, int label, FocalParams fp = {}) {
  require(label == 0 || label == 1, "focal_loss: label must be 0 or 1");
  p = std::clamp(p, kFocalEpsilon, 1.0 - kFocalEpsilon);
  const double pt = label == 1 ? p : 1.0 - p;
  const double at = label == 1 ? fp.alpha : 1.0 - fp.alpha;
  return -at * std::pow(1.0 - pt, fp.gamma) * std::log(pt);
}

/// Mean |pred - target| over components whose mask entry is set; 0 for an empty mask.
inline double l1_loss(const RegressionTarget& pred, const RegressionTarget& target,
                      const std::array<bool, 8>& mask = {true, true, true, true, true, true, true, true}) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (mask[i]) {
      sum += std::abs(pred[i] - target[i]);
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace echo_polar
