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
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "echo_polar/box_codec.hpp"
#include "echo_polar/errors.hpp"
#include "echo_polar/polar_geometry.hpp"

namespace echo_polar {

struct Point2 {
  double x, y;
};

using Polygon = std::vector<Point2>;

/// Counter-clockwise corners of the l x w footprint.
inline Polygon footprint(const Box3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = b.l / 2, hw = b.w / 2;
  const std::array<std::pair<double, double>, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  Polygon p;
  for (const auto& [u, v] : local) p.push_back({b.x + c * u - s * v, b.y + s * u + c * v});
  return p;
}

inline double polygon_area(const Polygon& p) {
  double a = 0;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) {
    const Point2& u = p[i];
    const Point2& v = p[(i + 1) % n];
    a += u.x * v.y - v.x * u.y;
  }
  return std::abs(a) / 2;
}

/// Sutherland-Hodgman clip of `subject` by a convex counter-clockwise `clip`.
inline Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Point2 a = clip[e], b = clip[(e + 1) % clip.size()];
    auto side = [&](const Point2& p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); };
    Polygon in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2 p = in[i], q = in[(i + 1) % in.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const double t = sp / (sp - sq);
        out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
  }
  return out;
}

namespace detail {
inline auto box_key(const Box3D& b) { return std::tie(b.x, b.y, b.z, b.l, b.w, b.h, b.yaw); }
}  // namespace detail

/// Rotated bird's-eye-view IoU of the l x w footprints. Arguments are put in a
/// canonical order first, so bev_iou(a, b) == bev_iou(b, a) bit for bit.
inline double bev_iou(const Box3D& a_in, const Box3D& b_in) {
  const bool swap = detail::box_key(b_in) < detail::box_key(a_in);
  const Box3D& a = swap ? b_in : a_in;
  const Box3D& b = swap ? a_in : b_in;
  const double area_a = a.l * a.w, area_b = b.l * b.w;
  if (!(area_a > 0) || !(area_b > 0)) return 0.0;
  const double reach = std::hypot(a.l, a.w) / 2 + std::hypot(b.l, b.w) / 2;
  if (std::hypot(a.x - b.x, a.y - b.y) > reach) return 0.0;
  const double inter = polygon_area(clip_convex(footprint(a), footprint(b)));
  const double uni = area_a + area_b - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

/// Longitudinal-error-tolerant IoU. The prediction may slide along its line
/// of sight from `origin`, toward the shift that best matches the ground
/// truth's longitudinal position, by at most tolerance * gt_range. The result
/// is the best IoU reachable on that segment, so it never falls below
/// bev_iou and never decreases as the tolerance grows.
inline double let_iou(const Box3D& pred, const Box3D& gt, double tolerance, Point2 origin = {0, 0}) {
  const double base = bev_iou(pred, gt);
  if (tolerance <= 0) return base;
  const double lx = pred.x - origin.x, ly = pred.y - origin.y;
  const double norm = std::hypot(lx, ly);
  if (norm == 0) return base;
  const double ux = lx / norm, uy = ly / norm;
  const double cap = tolerance * std::hypot(gt.x - origin.x, gt.y - origin.y);
  const double t_best = (gt.x - pred.x) * ux + (gt.y - pred.y) * uy;
  const double t_end = std::clamp(t_best, -cap, cap);
  if (t_end == 0) return base;

  auto iou_at = [&](double t) {
    Box3D moved = pred;
    moved.x += t * ux;
    moved.y += t * uy;
    return bev_iou(moved, gt);
  };
  // IoU under translation along a line is unimodal (Brunn-Minkowski), so a
  // coarse scan followed by golden-section refinement finds the maximum.
  constexpr int kSamples = 32;
  double best = base;
  int best_i = 0;
  std::array<double, kSamples + 1> vals{};
  vals[0] = base;
  for (int i = 1; i <= kSamples; ++i) {
    vals[i] = iou_at(t_end * i / kSamples);
    if (vals[i] > best) {
      best = vals[i];
      best_i = i;
    }
  }
  if (best <= 0) return base;
  double lo = t_end * std::max(0, best_i - 1) / kSamples;
  double hi = t_end * std::min(kSamples, best_i + 1) / kSamples;
  const double inv_phi = (std::sqrt(5.0) - 1) / 2;
  double m1 = hi - inv_phi * (hi - lo), m2 = lo + inv_phi * (hi - lo);
  double f1 = iou_at(m1), f2 = iou_at(m2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + inv_phi * (hi - lo);
      f2 = iou_at(m2);
    } else {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - inv_phi * (hi - lo);
      f1 = iou_at(m1);
    }
  }
  return std::max({best, f1, f2});
}

struct Detection {
  long frame = 0;
  double score = 0;
  Box3D box;
};

struct GroundTruth {
  long frame = 0;
  Box3D box;
};

using IouFn = std::function<double(const Box3D& pred, const Box3D& gt)>;

inline IouFn bev_iou_fn() {
  return [](const Box3D& p, const Box3D& g) { return bev_iou(p, g); };
}

inline IouFn let_iou_fn(double tolerance) {
  return [tolerance](const Box3D& p, const Box3D& g) { return let_iou(p, g, tolerance); };
}

struct MatchResult {
  std::vector<std::size_t> order;                     // prediction indices, processing order
  std::vector<std::optional<std::size_t>> pred_match;  // per prediction: matched GT index
  std::vector<double> pred_iou;                        // IoU with matched GT (0 if unmatched)
  std::vector<bool> gt_matched;
};

/// Greedy one-to-one matching. Predictions are processed by descending score;
/// equal scores go to the higher best-IoU first, then to the lexicographically
/// smaller (frame, box) record. Each prediction takes the unmatched GT of its
/// frame with the highest IoU >= threshold, ties to the lowest GT index.
inline MatchResult greedy_match(const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts,
                                const IouFn& iou, double threshold) {
  std::map<long, std::vector<std::size_t>> gts_by_frame;
  for (std::size_t g = 0; g < gts.size(); ++g) gts_by_frame[gts[g].frame].push_back(g);

  const std::size_t n = preds.size();
  std::vector<std::vector<double>> ious(n);
  std::vector<double> best_iou(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = gts_by_frame.find(preds[i].frame);
    if (it == gts_by_frame.end()) continue;
    for (std::size_t g : it->second) {
      ious[i].push_back(iou(preds[i].box, gts[g].box));
      best_iou[i] = std::max(best_iou[i], ious[i].back());
    }
  }

  MatchResult m;
  m.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.order[i] = i;
  std::sort(m.order.begin(), m.order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    if (best_iou[a] != best_iou[b]) return best_iou[a] > best_iou[b];
    const auto ka = std::tuple_cat(std::tie(preds[a].frame), detail::box_key(preds[a].box));
    const auto kb = std::tuple_cat(std::tie(preds[b].frame), detail::box_key(preds[b].box));
    if (ka != kb) return ka < kb;
    return a < b;
  });

  m.pred_match.assign(n, std::nullopt);
  m.pred_iou.assign(n, 0.0);
  m.gt_matched.assign(gts.size(), false);
  for (std::size_t i : m.order) {
    auto it = gts_by_frame.find(preds[i].frame);
    if (it == gts_by_frame.end()) continue;
    std::optional<std::size_t> pick;
    double pick_iou = 0;
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      const std::size_t g = it->second[k];
      if (m.gt_matched[g] || ious[i][k] < threshold) continue;
      if (!pick || ious[i][k] > pick_iou) {
        pick = g;
        pick_iou = ious[i][k];
      }
    }
    if (pick) {
      m.pred_match[i] = pick;
      m.pred_iou[i] = pick_iou;
      m.gt_matched[*pick] = true;
    }
  }
  return m;
}

/// Half-open ground-range interval [lo, hi) in metres.
struct RangeBucket {
  double lo;
  double hi;

  bool contains(const Box3D& b) const { return b.range() >= lo && b.range() < hi; }
  std::string name() const {
    auto fmt = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (!s.empty() && s.back() == '.') s.pop_back();
      return s;
    };
    return fmt(lo) + "-" + fmt(hi);
  }
};

/// AP of one (preds, gts) set; std::nullopt when there are no GTs. The
/// precision envelope is integrated over every recall step:
///   AP = (1 / n_gt) * sum over true positives i of max_{j >= i} precision_j.
inline std::optional<double> average_precision(const std::vector<Detection>& preds,
                                               const std::vector<GroundTruth>& gts, const IouFn& iou,
                                               double threshold) {
  if (gts.empty()) return std::nullopt;
  const MatchResult m = greedy_match(preds, gts, iou, threshold);
  const std::size_t n = m.order.size();
  // Extended precision keeps simple rational results correctly rounded.
  std::vector<long double> precision(n);
  std::vector<bool> tp(n);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp[k] = m.pred_match[m.order[k]].has_value();
    hits += tp[k] ? 1 : 0;
    precision[k] = static_cast<long double>(hits) / static_cast<long double>(k + 1);
  }
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  long double sum = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (tp[k]) sum += precision[k];
  return static_cast<double>(sum / static_cast<long double>(gts.size()));
}

struct BucketedMetric {
  std::optional<double> overall;
  std::vector<std::pair<RangeBucket, std::optional<double>>> buckets;
};

namespace detail {
inline std::pair<std::vector<Detection>, std::vector<GroundTruth>> filter_bucket(
    const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts, const RangeBucket& bucket) {
  std::vector<Detection> p;
  std::vector<GroundTruth> g;
  for (const auto& d : preds)
    if (bucket.contains(d.box)) p.push_back(d);
  for (const auto& t : gts)
    if (bucket.contains(t.box)) g.push_back(t);
  return {std::move(p), std::move(g)};
}
}  // namespace detail

/// AP overall and per range bucket; both predictions and GTs are filtered by
/// the range of their centre.
inline BucketedMetric average_precision(const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts,
                                        const IouFn& iou, double threshold,
                                        const std::vector<RangeBucket>& buckets) {
  BucketedMetric out;
  out.overall = average_precision(preds, gts, iou, threshold);
  for (const auto& b : buckets) {
    const auto [p, g] = detail::filter_bucket(preds, gts, b);
    out.buckets.emplace_back(b, average_precision(p, g, iou, threshold));
  }
  return out;
}

inline std::optional<double> recall_at(const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts,
                                       double iou_threshold, const IouFn& iou = bev_iou_fn()) {
  if (gts.empty()) return std::nullopt;
  const MatchResult m = greedy_match(preds, gts, iou, iou_threshold);
  const auto hits = std::count(m.gt_matched.begin(), m.gt_matched.end(), true);
  return static_cast<double>(hits) / static_cast<double>(gts.size());
}

inline BucketedMetric recall_at(const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts,
                                double iou_threshold, const std::vector<RangeBucket>& buckets,
                                const IouFn& iou = bev_iou_fn()) {
  BucketedMetric out;
  out.overall = recall_at(preds, gts, iou_threshold, iou);
  for (const auto& b : buckets) {
    const auto [p, g] = detail::filter_bucket(preds, gts, b);
    out.buckets.emplace_back(b, recall_at(p, g, iou_threshold, iou));
  }
  return out;
}

struct RadialPointMetrics {
  double ap = 0;
  double ar = 0;
  double f1 = 0;
  std::optional<double> range_error;    // m
  std::optional<double> azimuth_error;  // degrees
};

inline constexpr double kRadialIouThreshold = 0.5;

/// Score thresholds 0.1, 0.2, ..., 0.9.
inline std::array<double, 9> radial_score_thresholds() {
  std::array<double, 9> t{};
  for (int k = 1; k <= 9; ++k) t[k - 1] = k / 10.0;
  return t;
}

/// Point-style protocol: precision and recall at IoU 0.5 for every score
/// threshold, averaged into AP and AR; F1 from AP and AR. Precision is 0 at a
/// threshold that keeps no prediction. RE / AE pool every matched pair over
/// all thresholds.
inline RadialPointMetrics radial_point_metrics(const std::vector<Detection>& preds,
                                               const std::vector<GroundTruth>& gts) {
  RadialPointMetrics out;
  double re_sum = 0, ae_sum = 0;
  std::size_t n_pairs = 0;
  const auto thresholds = radial_score_thresholds();
  for (double t : thresholds) {
    std::vector<Detection> kept;
    for (const auto& d : preds)
      if (d.score >= t) kept.push_back(d);
    const MatchResult m = greedy_match(kept, gts, bev_iou_fn(), kRadialIouThreshold);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!m.pred_match[i]) continue;
      ++tp;
      const Box3D& p = kept[i].box;
      const Box3D& g = gts[*m.pred_match[i]].box;
      re_sum += std::abs(p.range() - g.range());
      ae_sum += std::abs(wrap_angle(p.azimuth() - g.azimuth())) * 180.0 / std::numbers::pi;
      ++n_pairs;
    }
    out.ap += kept.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(kept.size());
    out.ar += gts.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(gts.size());
  }
  out.ap /= static_cast<double>(thresholds.size());
  out.ar /= static_cast<double>(thresholds.size());
  out.f1 = out.ap + out.ar > 0 ? 2 * out.ap * out.ar / (out.ap + out.ar) : 0.0;
  if (n_pairs > 0) {
    out.range_error = re_sum / static_cast<double>(n_pairs);
    out.azimuth_error = ae_sum / static_cast<double>(n_pairs);
  }
  return out;
}

struct NuscenesErrors {
  double ate;  // m
  double ase;  // 1 - aligned IoU
  double aoe;  // rad
};

/// BEV IoU of two footprints after aligning centres and yaw.
inline double aligned_iou(const Box3D& a, const Box3D& b) {
  const double inter = std::min(a.l, b.l) * std::min(a.w, b.w);
  const double uni = a.l * a.w + b.l * b.w - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline std::optional<NuscenesErrors> nuscenes_errors(const std::vector<std::pair<Box3D, Box3D>>& matched) {
  if (matched.empty()) return std::nullopt;
  NuscenesErrors e{0, 0, 0};
  for (const auto& [p, g] : matched) {
    e.ate += std::hypot(p.x - g.x, p.y - g.y);
    e.ase += 1.0 - aligned_iou(p, g);
    e.aoe += std::abs(wrap_angle(p.yaw - g.yaw));
  }
  const double n = static_cast<double>(matched.size());
  return NuscenesErrors{e.ate / n, e.ase / n, e.aoe / n};
}

/// (prediction, GT) pairs produced by greedy matching.
inline std::vector<std::pair<Box3D, Box3D>> matched_pairs(const std::vector<Detection>& preds,
                                                          const std::vector<GroundTruth>& gts, const IouFn& iou,
                                                          double threshold) {
  const MatchResult m = greedy_match(preds, gts, iou, threshold);
  std::vector<std::pair<Box3D, Box3D>> out;
  for (std::size_t i : m.order)
    if (m.pred_match[i]) out.emplace_back(preds[i].box, gts[*m.pred_match[i]].box);
  return out;
}

}  // namespace echo_polar
