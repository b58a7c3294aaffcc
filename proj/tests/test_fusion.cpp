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

#include <random>
#include <set>

#include "echo_polar/fusion.hpp"
#include "oracles.hpp"

using namespace echo_polar;

namespace {

Tensor<double> random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor<double> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : t.flat()) v = u(rng);
  return t;
}

struct Rig {
  PolarGrid grid{6, 12, 8, 2.0, 50.0, -0.6, 0.6, 0};
  CalibrationSet calib;
  std::size_t h = 5, w = 24;

  Rig() {
    calib.rotation << 0, -1, 0, 0, 0, -1, 1, 0, 0;
    calib.intrinsics = {14, 14, 12, 2.5};
  }
  QueryTensor queries(std::uint64_t seed) const {
    return {random_tensor({grid.n_range, grid.n_azimuth, grid.channels}, seed), grid, QueryState::initial};
  }
};

}  // namespace

TEST_CASE("column map follows the pinhole model") {
  Rig rig;
  const auto map = image_column_map(rig.grid, rig.calib, rig.w);
  for (std::size_t r = 0; r < rig.grid.n_range; ++r)
    for (std::size_t a = 0; a < rig.grid.n_azimuth; ++a) {
      const double x = 12 - 14 * std::tan(rig.grid.azimuth_center(a));
      const auto& c = map[r * rig.grid.n_azimuth + a];
      if (x < -0.5 || x >= 23.5) {
        CHECK_FALSE(c);
      } else {
        REQUIRE(c);
        CHECK(static_cast<double>(*c) == std::floor(x + 0.5));
      }
    }
  // With a narrow image the outer azimuths fall outside.
  const auto narrow = image_column_map(rig.grid, rig.calib, 8);
  CHECK(std::count(narrow.begin(), narrow.end(), std::nullopt) > 0);
}

TEST_CASE("zero image features leave the queries unchanged") {
  Rig rig;
  const auto q = rig.queries(1);
  const Tensor<double> zero({rig.h, rig.w, rig.grid.channels});
  const auto p = AttentionParams::random(8, 2, 3);
  const auto q_hat = fuse_image_columns(q, zero, rig.calib, p);
  CHECK(q_hat.values == q.values);
  CHECK(q_hat.state == QueryState::image_fused);
  const Tensor<double> zero_radar({rig.grid.n_range, 4, rig.grid.channels});
  CHECK(fuse_radar_rows(q_hat, zero_radar, p).values == q.values);
}

TEST_CASE("image fusion matches per-query attention over its column") {
  Rig rig;
  const auto q = rig.queries(2);
  const auto img = random_tensor({rig.h, rig.w, 8}, 3);
  const auto p = AttentionParams::random(8, 2, 4);
  const auto map = image_column_map(rig.grid, rig.calib, rig.w);
  const auto q_hat = fuse_image_columns(q, img, map, p);
  const auto dp = oracle::dense(p);
  const Matrix pe = sinusoidal_encoding(rig.h, 8);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map[i]) continue;
    oracle::Rows query(1, std::vector<double>(8)), keys(rig.h, std::vector<double>(8)), vals = keys;
    for (std::size_t c = 0; c < 8; ++c) query[0][c] = q.values[i * 8 + c];
    for (std::size_t y = 0; y < rig.h; ++y)
      for (std::size_t c = 0; c < 8; ++c) {
        vals[y][c] = img(y, *map[i], c);
        keys[y][c] = vals[y][c] + pe(static_cast<long>(y), static_cast<long>(c));
      }
    const auto upd = oracle::attention(query, keys, vals, dp);
    for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(q_hat.values[i * 8 + c] - (query[0][c] + upd[0][c])) < 1e-12);
  }
}

TEST_CASE("image fusion never touches invisible queries") {
  Rig rig;
  const auto q = rig.queries(5);
  const auto img = random_tensor({rig.h, 8, 8}, 6);
  const auto p = AttentionParams::random(8, 2, 7);
  const auto map = image_column_map(rig.grid, rig.calib, 8);
  const auto q_hat = fuse_image_columns(q, img, map, p);
  std::size_t hidden = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t c = 0; c < 8; ++c) {
      if (!map[i]) {
        ++hidden;
        REQUIRE(q_hat.values[i * 8 + c] == q.values[i * 8 + c]);
      }
    }
  CHECK(hidden > 0);
}

TEST_CASE("changing one image column only moves queries mapped to it") {
  Rig rig;
  const auto q = rig.queries(8);
  auto img = random_tensor({rig.h, rig.w, 8}, 9);
  const auto p = AttentionParams::random(8, 2, 10);
  const auto map = image_column_map(rig.grid, rig.calib, rig.w);
  const auto before = fuse_image_columns(q, img, map, p);
  const std::size_t col = *map[3];
  for (std::size_t y = 0; y < rig.h; ++y)
    for (std::size_t c = 0; c < 8; ++c) img(y, col, c) += 0.5;
  const auto after = fuse_image_columns(q, img, map, p);
  for (std::size_t i = 0; i < map.size(); ++i) {
    bool moved = false;
    for (std::size_t c = 0; c < 8; ++c) moved |= after.values[i * 8 + c] != before.values[i * 8 + c];
    CHECK(moved == (map[i] && *map[i] == col));
  }
}

TEST_CASE("radar row fusion is local in range") {
  Rig rig;
  const auto q = rig.queries(11);
  auto radar = random_tensor({rig.grid.n_range, 7, 8}, 12);
  const auto p = AttentionParams::random(8, 4, 13);
  const auto base = fuse_radar_rows(q, radar, p);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t c = 0; c < 8; ++c) radar(2, t, c) *= -1.0;
  const auto ablated = fuse_radar_rows(q, radar, p);
  for (std::size_t r = 0; r < rig.grid.n_range; ++r) {
    bool same = true;
    for (std::size_t a = 0; a < rig.grid.n_azimuth; ++a)
      for (std::size_t c = 0; c < 8; ++c) same &= ablated.values(r, a, c) == base.values(r, a, c);
    CHECK(same == (r != 2));
  }
}

TEST_CASE("single chirp gives every azimuth the same radar update") {
  Rig rig;
  const auto q = rig.queries(14);
  const auto radar = random_tensor({rig.grid.n_range, 1, 8}, 15);
  const auto p = AttentionParams::random(8, 2, 16);
  const auto out = fuse_radar_rows(q, radar, p);
  for (std::size_t r = 0; r < rig.grid.n_range; ++r)
    for (std::size_t c = 0; c < 8; ++c) {
      const double d0 = out.values(r, 0, c) - q.values(r, 0, c);
      for (std::size_t a = 1; a < rig.grid.n_azimuth; ++a)
        CHECK(std::abs((out.values(r, a, c) - q.values(r, a, c)) - d0) < 1e-12);
    }
}

TEST_CASE("shape errors") {
  Rig rig;
  const auto q = rig.queries(1);
  const auto p = AttentionParams::random(8, 2, 1);
  CHECK_THROWS_AS(fuse_radar_rows(q, Tensor<double>({rig.grid.n_range + 1, 3, 8}), p), InputError);
  CHECK_THROWS_AS(fuse_image_columns(q, Tensor<double>({rig.h, rig.w, 4}), rig.calib, p), ContractViolation);
  QueryTensor bad = q;
  bad.values = Tensor<double>({2, 2, 8});
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}
