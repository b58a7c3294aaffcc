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

#include "echo_polar/metrics.hpp"
#include "oracles.hpp"

using namespace echo_polar;
using Catch::Approx;
using std::numbers::pi;

namespace {

Box3D box(double x, double y, double l, double w, double yaw = 0) { return {x, y, 0, l, w, 1, yaw}; }

Box3D random_box(std::mt19937_64& rng, double spread = 3) {
  std::uniform_real_distribution<double> c(-spread, spread), d(0.5, 5), a(-pi, pi);
  return box(c(rng), c(rng), d(rng), d(rng), a(rng));
}

}  // namespace

TEST_CASE("bev_iou basic cases") {
  const Box3D a = box(10, 2, 4, 2, 0.3);
  CHECK(bev_iou(a, a) == Approx(1.0).epsilon(1e-14));
  CHECK(bev_iou(box(0, 0, 1, 1), box(0.5, 0, 1, 1)) == 1.0 / 3.0);
  CHECK(bev_iou(box(0, 0, 1, 1), box(5, 0, 1, 1)) == 0.0);
  const double rot = bev_iou(box(0, 0, 1, 1), box(0, 0, 1, 1, pi / 4));
  CHECK(std::abs(rot - oracle::mc_iou(box(0, 0, 1, 1), box(0, 0, 1, 1, pi / 4), 1000, 1)) < 1e-3);
  // Exact value: octagon area 2 (sqrt 2 - 1), union 2 - that.
  const double inter = 2 * (std::sqrt(2.0) - 1);
  CHECK(rot == Approx(inter / (2 - inter)).epsilon(1e-12));
}

TEST_CASE("bev_iou is symmetric, bounded and rigid-motion invariant") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(-pi, pi), shift(-50, 50);
  for (int i = 0; i < 300; ++i) {
    const Box3D a = random_box(rng), b = random_box(rng);
    const double v = bev_iou(a, b);
    CHECK(v == bev_iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    const double th = ang(rng), tx = shift(rng), ty = shift(rng);
    auto move = [&](Box3D q) {
      const double x = std::cos(th) * q.x - std::sin(th) * q.y + tx;
      const double y = std::sin(th) * q.x + std::cos(th) * q.y + ty;
      q.x = x, q.y = y, q.yaw += th;
      return q;
    };
    CHECK(bev_iou(move(a), move(b)) == Approx(v).margin(1e-9));
  }
}

TEST_CASE("bev_iou matches Monte Carlo on rotated pairs") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Box3D a = random_box(rng, 1.5), b = random_box(rng, 1.5);
    CHECK(std::abs(bev_iou(a, b) - oracle::mc_iou(a, b, 700, 100 + static_cast<std::uint64_t>(i))) < 2e-3);
  }
}

TEST_CASE("LET-IoU behaviour") {
  const Box3D gt = box(40, 0, 4, 2, 0.2);
  CHECK(let_iou(gt, gt, 0.0) == bev_iou(gt, gt));

  SECTION("radial error inside the tolerance is absorbed") {
    const double r = std::hypot(gt.x, gt.y);
    Box3D pred = gt;
    pred.x *= 1.05;
    pred.y *= 1.05;
    CHECK(r > 0);
    CHECK(bev_iou(pred, gt) < 0.7);
    CHECK(let_iou(pred, gt, 0.1) == Approx(1.0).epsilon(1e-12));
  }
  SECTION("lateral error is not forgiven") {
    Box3D pred = gt;
    pred.y += 0.8;
    const Box3D gt0 = box(40, 0, 4, 2, 0.0);
    Box3D pred0 = gt0;
    pred0.y = 0.8;
    // Offset perpendicular to the line of sight at the GT centre.
    pred0.x = 40;
    CHECK(let_iou(pred0, gt0, 0.1) == Approx(bev_iou(pred0, gt0)).epsilon(1e-3));
  }
  SECTION("never below bev_iou and monotone in the tolerance") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> c(-30, 30), off(-3, 3);
    for (int i = 0; i < 300; ++i) {
      Box3D g = random_box(rng);
      g.x += 20 + c(rng);
      g.y += c(rng);
      Box3D p = g;
      p.x += off(rng), p.y += off(rng), p.yaw += 0.2 * off(rng);
      double prev = bev_iou(p, g);
      CHECK(let_iou(p, g, 0) == prev);
      for (double t : {0.02, 0.05, 0.1, 0.3}) {
        const double v = let_iou(p, g, t);
        CHECK(v >= prev - 1e-12);
        prev = v;
      }
    }
  }
}

TEST_CASE("AP on the three-prediction toy case") {
  // GT 0 and GT 1 in one frame; scores .9 (hit), .8 (miss), .7 (hit).
  const std::vector<GroundTruth> gts{{0, box(10, 0, 4, 2)}, {0, box(30, 5, 4, 2)}};
  const std::vector<Detection> preds{{0, 0.9, box(10, 0, 4, 2)}, {0, 0.8, box(60, -20, 4, 2)}, {0, 0.7, box(30.1, 5, 4, 2)}};
  const auto ap = average_precision(preds, gts, bev_iou_fn(), 0.7);
  REQUIRE(ap);
  CHECK(*ap == 5.0 / 6.0);
  CHECK(*ap == oracle::average_precision(preds, gts, 0.7));
}

TEST_CASE("AP trivial cases") {
  std::mt19937_64 rng(1);
  std::vector<GroundTruth> gts;
  std::vector<Detection> perfect;
  for (int i = 0; i < 6; ++i) {
    Box3D b = random_box(rng);
    b.x += 15.0 * i;
    gts.push_back({i % 2, b});
    perfect.push_back({i % 2, 0.1 * (7 - i), b});
  }
  CHECK(*average_precision(perfect, gts, bev_iou_fn(), 0.7) == 1.0);
  CHECK(*average_precision({}, gts, bev_iou_fn(), 0.7) == 0.0);
  CHECK_FALSE(average_precision(perfect, {}, bev_iou_fn(), 0.7));
  CHECK(*recall_at(perfect, gts, 0.7) == 1.0);
  CHECK(*recall_at({}, gts, 0.7) == 0.0);
  CHECK_FALSE(recall_at(perfect, {}, 0.7));
}

TEST_CASE("AP and recall agree with the exhaustive oracle and are order-invariant") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1), off(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<GroundTruth> gts;
    std::vector<Detection> preds;
    for (int i = 0; i < 8; ++i) {
      Box3D b = random_box(rng, 1);
      b.x += 6.0 * i;
      gts.push_back({i % 3, b});
      if (u(rng) < 0.8) {
        Box3D p = b;
        p.x += 0.6 * off(rng), p.y += 0.6 * off(rng), p.yaw += 0.2 * off(rng);
        preds.push_back({i % 3, u(rng), p});
      }
      if (u(rng) < 0.3) preds.push_back({i % 3, u(rng), random_box(rng, 20)});
    }
    for (double thr : {0.3, 0.5, 0.7}) {
      const double ap = *average_precision(preds, gts, bev_iou_fn(), thr);
      CHECK(ap == Approx(oracle::average_precision(preds, gts, thr)).epsilon(1e-12));
      const auto om = oracle::greedy(preds, gts, thr);
      const auto hits = std::count_if(om.assigned.begin(), om.assigned.end(), [](long a) { return a >= 0; });
      CHECK(*recall_at(preds, gts, thr) == static_cast<double>(hits) / static_cast<double>(gts.size()));
    }
    double prev = 2;
    for (double thr = 0.1; thr < 0.95; thr += 0.1) {
      const double ap = *average_precision(preds, gts, bev_iou_fn(), thr);
      CHECK(ap <= prev + 1e-15);
      prev = ap;
    }
    auto shuffled = preds;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(*average_precision(shuffled, gts, bev_iou_fn(), 0.5) == *average_precision(preds, gts, bev_iou_fn(), 0.5));
    const auto m1 = radial_point_metrics(preds, gts), m2 = radial_point_metrics(shuffled, gts);
    CHECK(m1.ap == m2.ap);
    CHECK(m1.ar == m2.ar);
  }
}

TEST_CASE("greedy matching tie-breaks") {
  const std::vector<GroundTruth> gts{{0, box(10, 0, 4, 2)}, {0, box(10, 0, 4, 2)}};
  const std::vector<Detection> preds{{0, 0.5, box(10.3, 0, 4, 2)}, {0, 0.5, box(10, 0, 4, 2)}};
  const auto m = greedy_match(preds, gts, bev_iou_fn(), 0.5);
  // Equal scores: the higher-IoU prediction goes first and takes GT 0.
  CHECK(m.order == std::vector<std::size_t>{1, 0});
  CHECK(*m.pred_match[1] == 0);
  CHECK(*m.pred_match[0] == 1);
  const auto again = greedy_match(preds, gts, bev_iou_fn(), 0.5);
  CHECK(again.pred_match == m.pred_match);
}

TEST_CASE("bucketed AP filters by range") {
  const std::vector<GroundTruth> gts{{0, box(10, 0, 4, 2)}, {0, box(70, 0, 4, 2)}};
  const std::vector<Detection> preds{{0, 0.9, box(10, 0, 4, 2)}};
  const auto m = average_precision(preds, gts, bev_iou_fn(), 0.7, {{0, 50}, {50, 100}, {100, 150}});
  CHECK(*m.overall == 0.5);
  CHECK(*m.buckets[0].second == 1.0);
  CHECK(*m.buckets[1].second == 0.0);
  CHECK_FALSE(m.buckets[2].second);
  CHECK(m.buckets[0].first.name() == "0-50");
  CHECK(RangeBucket{2.5, 10}.name() == "2.5-10");
}

TEST_CASE("radial point protocol") {
  const std::vector<GroundTruth> gts{{0, box(10, 1, 4, 2)}, {0, box(30, -6, 4, 2, 0.3)}, {1, box(50, 8, 4, 2, 1.0)}};
  SECTION("perfect predictions") {
    std::vector<Detection> preds;
    for (const auto& g : gts) preds.push_back({g.frame, 1.0, g.box});
    const auto m = radial_point_metrics(preds, gts);
    CHECK(m.ap == 1.0);
    CHECK(m.ar == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(*m.range_error == 0.0);
    CHECK(*m.azimuth_error == 0.0);
  }
  SECTION("low scores are never kept") {
    std::vector<Detection> preds;
    for (const auto& g : gts) preds.push_back({g.frame, 0.05, g.box});
    const auto m = radial_point_metrics(preds, gts);
    CHECK(m.ar == 0.0);
    CHECK(m.ap == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK_FALSE(m.range_error);
  }
  SECTION("mixed two-frame case matches the per-threshold oracle") {
    const std::vector<Detection> preds{{0, 0.95, box(10.2, 1.1, 4, 2)}, {0, 0.35, box(30.4, -6.1, 4, 2, 0.32)},
                                       {0, 0.55, box(20, 20, 4, 2)},    {1, 0.72, box(50.5, 8.2, 4.2, 2, 1.0)},
                                       {1, 0.15, box(51, 8, 4, 2, 1.1)}, {1, 0.85, box(80, 0, 4, 2)}};
    const auto m = radial_point_metrics(preds, gts);
    const auto o = oracle::radial(preds, gts);
    CHECK(m.ap == o.ap);
    CHECK(m.ar == o.ar);
    CHECK(m.f1 == o.f1);
    REQUIRE(m.range_error);
    CHECK(*m.range_error == *o.re);
    CHECK(*m.azimuth_error == *o.ae);
  }
}

TEST_CASE("nuScenes-style errors") {
  const Box3D g = box(10, 2, 4, 2, 0.1);
  CHECK_FALSE(nuscenes_errors({}));
  const auto exact = *nuscenes_errors({{g, g}});
  CHECK(exact.ate == 0.0);
  CHECK(exact.ase == 0.0);
  CHECK(exact.aoe == 0.0);
  Box3D big = g;
  big.l *= 2, big.w *= 2;
  CHECK(nuscenes_errors({{big, g}})->ase == Approx(0.75).epsilon(1e-15));
  Box3D turned = g;
  turned.yaw += pi / 2;
  CHECK(nuscenes_errors({{turned, g}})->aoe == Approx(pi / 2).epsilon(1e-14));
  Box3D moved = g;
  moved.x += 3, moved.y += 4;
  const auto mix = *nuscenes_errors({{moved, g}, {g, g}});
  CHECK(mix.ate == 2.5);
  Box3D flipped = g;
  flipped.yaw += 3 * pi / 2;
  CHECK(nuscenes_errors({{flipped, g}})->aoe == Approx(pi / 2).epsilon(1e-12));
}
