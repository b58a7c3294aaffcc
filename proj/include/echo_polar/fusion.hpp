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
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "echo_polar/attention.hpp"
#include "echo_polar/errors.hpp"
#include "echo_polar/polar_geometry.hpp"
#include "echo_polar/tensor.hpp"

namespace echo_polar {

enum class QueryState { initial, image_fused, radar_fused };

/// BEV queries [n_range][n_azimuth][d] over a polar grid.
struct QueryTensor {
  Tensor<double> values;
  PolarGrid grid;
  QueryState state = QueryState::initial;

  void validate() const {
    require(values.rank() == 3 && values.extent(0) == grid.n_range && values.extent(1) == grid.n_azimuth &&
                values.extent(2) == grid.channels,
            "queries: shape " + shape_string(values.shape()) + " does not match grid");
    for (double v : values.flat()) require(std::isfinite(v), "queries: non-finite value");
  }
};

/// Image column used by each query, flat-indexed r * n_azimuth + a.
/// std::nullopt marks an image-invisible query.
using ColumnMap = std::vector<std::optional<std::size_t>>;

/// Nearest image column of every query pillar at height z_ref. Queries behind
/// the camera or outside [0, image_width) are invisible. The calibration is
/// expected in feature-map pixel units.
inline ColumnMap image_column_map(const PolarGrid& grid, const CalibrationSet& calib, std::size_t image_width,
                                  double z_ref = 0.0) {
  ColumnMap map(grid.n_range * grid.n_azimuth);
  for (std::size_t r = 0; r < grid.n_range; ++r)
    for (std::size_t a = 0; a < grid.n_azimuth; ++a) {
      const auto x = column_of_query(grid.range_center(r), grid.azimuth_center(a), z_ref, calib);
      if (!x || !std::isfinite(*x)) continue;
      const double col = std::floor(*x + 0.5);
      if (col >= 0 && col < static_cast<double>(image_width))
        map[r * grid.n_azimuth + a] = static_cast<std::size_t>(col);
    }
  return map;
}

namespace detail {

// Column x of an [H][W][d] image feature map as an [H][d] matrix.
inline Matrix image_column(const Tensor<double>& features, std::size_t x) {
  const std::size_t h = features.extent(0), d = features.extent(2);
  Matrix m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(d));
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t c = 0; c < d; ++c) m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(c)) = features(y, x, c);
  return m;
}

// Row r of an [R][T][d] radar feature map as a [T][d] matrix.
inline Matrix radar_row(const Tensor<double>& features, std::size_t r) {
  const std::size_t n_t = features.extent(1), d = features.extent(2);
  Matrix m(static_cast<Eigen::Index>(n_t), static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < n_t; ++t)
    for (std::size_t c = 0; c < d; ++c) m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = features(r, t, c);
  return m;
}

}  // namespace detail

/// Column-wise image fusion with an explicit column map. Each visible query
/// attends over its image column F(x, 0..H-1); keys carry a sinusoidal code of
/// the row index. Update rule is residual: q_hat = q + CrossAttn(q, F + PE, F).
inline QueryTensor fuse_image_columns(const QueryTensor& q, const Tensor<double>& image_features,
                                      const ColumnMap& columns, const AttentionParams& params) {
  q.validate();
  params.validate();
  require(image_features.rank() == 3, "fuse_image_columns: image features must be [H][W][d]");
  const std::size_t h = image_features.extent(0), w = image_features.extent(1), d = image_features.extent(2);
  require(d == q.grid.channels && d == params.dim(), "fuse_image_columns: channel width mismatch");
  require(columns.size() == q.grid.n_range * q.grid.n_azimuth, "fuse_image_columns: column map size mismatch");

  // Queries sharing a column share keys and values; group them so each
  // column's keys are built once.
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i]) {
      require(*columns[i] < w, "fuse_image_columns: column index outside the image");
      groups[*columns[i]].push_back(i);
    }

  QueryTensor out = q;
  out.state = QueryState::image_fused;
  const Matrix pe = sinusoidal_encoding(h, d);
  for (const auto& [col, members] : groups) {
    const Matrix values = detail::image_column(image_features, col);
    const Matrix keys = values + pe;
    Matrix queries(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t c = 0; c < d; ++c)
        queries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = q.values[members[i] * d + c];
    const Matrix update = attention_forward(queries, keys, values, params);
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t c = 0; c < d; ++c)
        out.values[members[i] * d + c] += update(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  }
  return out;
}

inline QueryTensor fuse_image_columns(const QueryTensor& q, const Tensor<double>& image_features,
                                      const CalibrationSet& calib, const AttentionParams& params,
                                      double z_ref = 0.0) {
  require(image_features.rank() == 3, "fuse_image_columns: image features must be [H][W][d]");
  return fuse_image_columns(q, image_features, image_column_map(q.grid, calib, image_features.extent(1), z_ref),
                            params);
}

/// Range-wise radar fusion: every query at range bin r attends over radar row
/// G(r, 0..T-1), keys coded by chirp index. q_tilde = q_hat + CrossAttn(...).
inline QueryTensor fuse_radar_rows(const QueryTensor& q_hat, const Tensor<double>& radar_features,
                                   const AttentionParams& params) {
  q_hat.validate();
  params.validate();
  require(radar_features.rank() == 3, "fuse_radar_rows: radar features must be [R][T][d]");
  const std::size_t n_r = radar_features.extent(0), n_t = radar_features.extent(1), d = radar_features.extent(2);
  if (n_r != q_hat.grid.n_range)
    throw InputError("fuse_radar_rows: radar range length " + std::to_string(n_r) + " != query range bins " +
                     std::to_string(q_hat.grid.n_range));
  require(d == q_hat.grid.channels && d == params.dim(), "fuse_radar_rows: channel width mismatch");

  QueryTensor out = q_hat;
  out.state = QueryState::radar_fused;
  const std::size_t n_a = q_hat.grid.n_azimuth;
  const Matrix pe = sinusoidal_encoding(n_t, d);
  for (std::size_t r = 0; r < n_r; ++r) {
    const Matrix values = detail::radar_row(radar_features, r);
    const Matrix keys = values + pe;
    Matrix queries(static_cast<Eigen::Index>(n_a), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < n_a; ++a)
      for (std::size_t c = 0; c < d; ++c)
        queries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = q_hat.values(r, a, c);
    const Matrix update = attention_forward(queries, keys, values, params);
    for (std::size_t a = 0; a < n_a; ++a)
      for (std::size_t c = 0; c < d; ++c)
        out.values(r, a, c) += update(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
  }
  return out;
}

}  // namespace echo_polar
