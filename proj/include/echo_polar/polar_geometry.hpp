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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <utility>

#include "echo_polar/errors.hpp"

namespace echo_polar {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0) w += two_pi;
  return w - std::numbers::pi;
}

struct Intrinsics {
  double fx = 1, fy = 1;  // pixels
  double u0 = 0, v0 = 0;  // pixels
};

/// Pinhole camera with radar-to-camera extrinsics: p_C = R p_R + T.
struct CalibrationSet {
  Intrinsics intrinsics;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  /// Checks R^T R = I and det R = 1 to `tol`.
  void validate(double tol = 1e-9) const {
    require_input(intrinsics.fx > 0 && intrinsics.fy > 0, "calibration: focal lengths must be positive");
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    require_input(ortho <= tol, "calibration: rotation is not orthonormal (max |R^T R - I| = " +
                                    std::to_string(ortho) + ")");
    require_input(std::abs(rotation.determinant() - 1.0) <= tol, "calibration: det R != 1");
  }
};

/// Radar-to-camera rotation published for the RADIal rig. Rounded to four
/// decimals, so it is orthonormal only to about 1e-4.
inline Mat3 radial_rotation() {
  Mat3 r;
  r << 0.0465, -0.9989, -0.0051,
      -0.0476, 0.0029, -0.9989,
       0.9978, 0.0467, -0.0474;
  return r;
}

struct PolarCoord {
  double range;
  double azimuth;
};

inline std::pair<double, double> polar_to_cartesian(double range, double azimuth) {
  return {range * std::cos(azimuth), range * std::sin(azimuth)};
}

inline PolarCoord cartesian_to_polar(double x, double y) { return {std::hypot(x, y), std::atan2(y, x)}; }

struct PixelProjection {
  double x_image;  // column
  double y_image;  // row
  double z_camera;
};

/// Camera coordinates R p + T.
inline Vec3 to_camera(const Vec3& p_radar, const CalibrationSet& calib) {
  return calib.rotation * p_radar + calib.translation;
}

/// Pinhole projection. std::nullopt when the point is not in front of the camera.
inline std::optional<PixelProjection> project_point(const Vec3& p_radar, const CalibrationSet& calib) {
  const Vec3 c = to_camera(p_radar, calib);
  if (!(c.z() > 0)) return std::nullopt;
  const auto& k = calib.intrinsics;
  return PixelProjection{k.u0 + k.fx * c.x() / c.z(), k.v0 + k.fy * c.y() / c.z(), c.z()};
}

/// Image column x_I of the pillar through (range, azimuth), sampled at height z_ref.
inline std::optional<double> column_of_query(double range, double azimuth, double z_ref,
                                             const CalibrationSet& calib) {
  const auto [x, y] = polar_to_cartesian(range, azimuth);
  const auto px = project_point(Vec3(x, y, z_ref), calib);
  if (!px) return std::nullopt;
  return px->x_image;
}

/// Squared z-coefficients (R[0][2]^2, R[2][2]^2) of x_C and z_C. Both zero means
/// every pillar projects onto a single image column.
struct ColumnResidual {
  double c1_sq;
  double c3_sq;

  bool holds(double tol) const { return c1_sq <= tol && c3_sq <= tol; }
};

inline ColumnResidual column_condition(const Mat3& r) {
  return {r(0, 2) * r(0, 2), r(2, 2) * r(2, 2)};
}

/// Roll/pitch/yaw composed as R = Rz(yaw) Ry(pitch) Rx(roll).
struct EulerAngles {
  double roll = 0;   // alpha
  double pitch = 0;  // beta
  double yaw = 0;    // gamma
};

inline Mat3 euler_to_rotation(const EulerAngles& e) {
  const double ca = std::cos(e.roll), sa = std::sin(e.roll);
  const double cb = std::cos(e.pitch), sb = std::sin(e.pitch);
  const double cg = std::cos(e.yaw), sg = std::sin(e.yaw);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
  return rz * ry * rx;
}

/// Inverse of euler_to_rotation with pitch in [-pi/2, pi/2]. At gimbal lock
/// (|cos pitch| < 1e-9) only roll -/+ yaw is observable; yaw is set to 0.
inline EulerAngles rotation_to_euler(const Mat3& r) {
  EulerAngles e;
  const double sb = std::clamp(-r(2, 0), -1.0, 1.0);
  e.pitch = std::asin(sb);
  if (std::abs(std::cos(e.pitch)) >= 1e-9) {
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // With yaw = 0: R(0,1) = sin(pitch) sin(roll), R(1,1) = cos(roll).
    e.pitch = sb > 0 ? std::numbers::pi / 2 : -std::numbers::pi / 2;
    e.yaw = 0;
    e.roll = std::atan2(sb > 0 ? r(0, 1) : -r(0, 1), r(1, 1));
  }
  return e;
}

/// Membership in the three angle families for which both z-coefficients vanish:
///   pitch =  pi/2, yaw =  roll +/- pi/2
///   pitch = -pi/2, yaw = -roll +/- pi/2
///   roll = +/- pi/2, yaw in {0, pi}
inline bool in_solution_family(const EulerAngles& e, double tol) {
  using std::numbers::pi;
  auto near = [tol](double a, double b) { return std::abs(wrap_angle(a - b)) <= tol; };
  const bool fam1 = near(e.pitch, pi / 2) && (near(e.yaw, e.roll + pi / 2) || near(e.yaw, e.roll - pi / 2));
  const bool fam2 = near(e.pitch, -pi / 2) && (near(e.yaw, -e.roll + pi / 2) || near(e.yaw, -e.roll - pi / 2));
  const bool fam3 = (near(e.roll, pi / 2) || near(e.roll, -pi / 2)) && (near(e.yaw, 0) || near(e.yaw, pi));
  return fam1 || fam2 || fam3;
}

/// Polar BEV grid of n_range x n_azimuth bins with `channels` features per query.
struct PolarGrid {
  std::size_t n_range = 0;
  std::size_t n_azimuth = 0;
  std::size_t channels = 0;
  double r_min = 1, r_max = 100;                // m
  double phi_min = -0.6, phi_max = 0.6;         // rad
  int level = 0;

  void validate() const {
    require_input(n_range > 0 && n_azimuth > 0, "grid: bin counts must be positive");
    require_input(r_min > 0 && r_max > r_min, "grid: need 0 < r_min < r_max");
    require_input(phi_max > phi_min, "grid: need phi_min < phi_max");
  }

  double range_step() const { return (r_max - r_min) / static_cast<double>(n_range); }
  double azimuth_step() const { return (phi_max - phi_min) / static_cast<double>(n_azimuth); }
  double range_center(std::size_t i) const { return r_min + (static_cast<double>(i) + 0.5) * range_step(); }
  double azimuth_center(std::size_t j) const {
    return phi_min + (static_cast<double>(j) + 0.5) * azimuth_step();
  }

  /// (range bin, azimuth bin) containing a polar coordinate, if inside the grid.
  std::optional<std::pair<std::size_t, std::size_t>> bin_of(double range, double azimuth) const {
    if (range < r_min || range >= r_max || azimuth < phi_min || azimuth >= phi_max) return std::nullopt;
    const auto i = std::min(n_range - 1, static_cast<std::size_t>((range - r_min) / range_step()));
    const auto j = std::min(n_azimuth - 1, static_cast<std::size_t>((azimuth - phi_min) / azimuth_step()));
    return std::pair{i, j};
  }
};

/// First-order bound on the column drift of one pillar over [z_lo, z_hi]:
/// f_x (|c1| + |c3| |x_C / z_C|) |dz| / z_C, evaluated at z = 0.
inline std::optional<double> first_order_drift_bound(double range, double azimuth, double z_lo, double z_hi,
                                                     const CalibrationSet& calib) {
  const auto [x, y] = polar_to_cartesian(range, azimuth);
  const Vec3 c = to_camera(Vec3(x, y, 0.0), calib);
  if (!(c.z() > 0)) return std::nullopt;
  const double c1 = calib.rotation(0, 2), c3 = calib.rotation(2, 2);
  return calib.intrinsics.fx * (std::abs(c1) + std::abs(c3) * std::abs(c.x() / c.z())) * std::abs(z_hi - z_lo) /
         c.z();
}

/// Measured |x_I(z_hi) - x_I(z_lo)|. x_I is a Moebius function of z, so the
/// endpoint difference is the drift over the whole interval.
inline std::optional<double> column_drift(double range, double azimuth, double z_lo, double z_hi,
                                          const CalibrationSet& calib) {
  const auto lo = column_of_query(range, azimuth, z_lo, calib);
  const auto hi = column_of_query(range, azimuth, z_hi, calib);
  if (!lo || !hi) return std::nullopt;
  return std::abs(*hi - *lo);
}

}  // namespace echo_polar
