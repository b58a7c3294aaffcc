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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "echo_polar/attention.hpp"
#include "echo_polar/cfar.hpp"
#include "echo_polar/container.hpp"
#include "echo_polar/errors.hpp"
#include "echo_polar/fmcw_sim.hpp"
#include "echo_polar/metrics.hpp"
#include "echo_polar/polar_geometry.hpp"

namespace echo_polar::io {

using json = nlohmann::json;

// Published extrinsics are rounded to four decimals.
inline constexpr double kCalibrationTolerance = 1e-3;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temp file and renames, so failures leave no partial output.
inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw InputError("write failed for " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

namespace detail {
template <typename T>
T required(const json& obj, const char* key, std::string_view ctx) {
  if (!obj.is_object() || !obj.contains(key))
    throw InputError(std::string(ctx) + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string(ctx) + ": field \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T optional(const json& obj, const char* key, T fallback, std::string_view ctx) {
  if (!obj.contains(key)) return fallback;
  return required<T>(obj, key, ctx);
}
}  // namespace detail

inline RadarConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("config: expected a JSON object");
  RadarConfig c;
  constexpr std::string_view ctx = "config";
  c.carrier_freq = detail::optional(j, "carrier_freq", c.carrier_freq, ctx);
  c.bandwidth = detail::optional(j, "bandwidth", c.bandwidth, ctx);
  c.chirp_duration = detail::optional(j, "chirp_duration", c.chirp_duration, ctx);
  c.sample_rate = detail::optional(j, "sample_rate", c.sample_rate, ctx);
  c.n_samples = detail::optional(j, "n_samples", c.n_samples, ctx);
  c.n_chirps = detail::optional(j, "n_chirps", c.n_chirps, ctx);
  c.n_tx = detail::optional(j, "n_tx", c.n_tx, ctx);
  c.n_rx = detail::optional(j, "n_rx", c.n_rx, ctx);
  c.rx_spacing = detail::optional(j, "rx_spacing", c.rx_spacing, ctx);
  c.tx_spacing = detail::optional(j, "tx_spacing", c.tx_spacing, ctx);
  c.ddm_enabled = detail::optional(j, "ddm_enabled", c.ddm_enabled, ctx);
  c.noise_power = detail::optional(j, "noise_power", c.noise_power, ctx);
  c.rng_seed = detail::optional(j, "rng_seed", c.rng_seed, ctx);
  c.tx_elevation_offsets = detail::optional(j, "tx_elevation_offsets", c.tx_elevation_offsets, ctx);
  c.validate();
  return c;
}

inline json config_to_json(const RadarConfig& c) {
  return {{"carrier_freq", c.carrier_freq}, {"bandwidth", c.bandwidth},   {"chirp_duration", c.chirp_duration},
          {"sample_rate", c.sample_rate},   {"n_samples", c.n_samples},   {"n_chirps", c.n_chirps},
          {"n_tx", c.n_tx},                 {"n_rx", c.n_rx},             {"rx_spacing", c.rx_spacing},
          {"tx_spacing", c.tx_spacing},     {"ddm_enabled", c.ddm_enabled}, {"noise_power", c.noise_power},
          {"rng_seed", c.rng_seed},         {"tx_elevation_offsets", c.tx_elevation_offsets}};
}

/// Accepts either a scene document {"targets": [...], "config": {...}} or a bare config object.
inline RadarConfig config_from_document(const json& doc) {
  if (doc.is_object() && doc.contains("config")) return config_from_json(doc.at("config"));
  return config_from_json(doc);
}

struct SceneDocument {
  Scene scene;
  RadarConfig config;
};

inline SceneDocument scene_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("scene: expected a JSON object");
  if (!doc.contains("targets") || !doc.at("targets").is_array()) throw InputError("scene: missing array \"targets\"");
  if (!doc.contains("config")) throw InputError("scene: missing field \"config\"");
  SceneDocument out;
  out.config = config_from_json(doc.at("config"));
  constexpr double deg = std::numbers::pi / 180.0;
  std::size_t i = 0;
  for (const auto& t : doc.at("targets")) {
    const std::string ctx = "scene target " + std::to_string(i++);
    PointTarget p;
    p.range = detail::required<double>(t, "range", ctx);
    p.radial_velocity = detail::required<double>(t, "velocity", ctx);
    p.azimuth = detail::required<double>(t, "azimuth_deg", ctx) * deg;
    p.elevation = detail::optional<double>(t, "elevation_deg", 0.0, ctx) * deg;
    p.amplitude = detail::required<double>(t, "amplitude", ctx);
    validate_target(p, out.config);
    out.scene.targets.push_back(p);
  }
  return out;
}

inline CalibrationSet calibration_from_json(const json& j) {
  constexpr std::string_view ctx = "calibration";
  CalibrationSet c;
  c.intrinsics.fx = detail::required<double>(j, "fx", ctx);
  c.intrinsics.fy = detail::required<double>(j, "fy", ctx);
  c.intrinsics.u0 = detail::required<double>(j, "u0", ctx);
  c.intrinsics.v0 = detail::required<double>(j, "v0", ctx);
  const auto r = detail::required<std::vector<std::vector<double>>>(j, "R", ctx);
  const auto t = detail::required<std::vector<double>>(j, "T", ctx);
  if (r.size() != 3 || t.size() != 3) throw InputError("calibration: R must be 3x3 and T length 3");
  for (int i = 0; i < 3; ++i) {
    if (r[i].size() != 3) throw InputError("calibration: R must be 3x3");
    for (int k = 0; k < 3; ++k) c.rotation(i, k) = r[i][k];
    c.translation(i) = t[i];
  }
  c.validate(kCalibrationTolerance);
  return c;
}

inline json calibration_to_json(const CalibrationSet& c) {
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back({c.rotation(i, 0), c.rotation(i, 1), c.rotation(i, 2)});
  return {{"fx", c.intrinsics.fx}, {"fy", c.intrinsics.fy}, {"u0", c.intrinsics.u0}, {"v0", c.intrinsics.v0},
          {"R", r}, {"T", {c.translation(0), c.translation(1), c.translation(2)}}};
}

inline Box3D box_from_json(const json& j, std::string_view ctx) {
  Box3D b;
  b.x = detail::required<double>(j, "x", ctx);
  b.y = detail::required<double>(j, "y", ctx);
  b.z = detail::optional<double>(j, "z", 0.0, ctx);
  b.l = detail::required<double>(j, "l", ctx);
  b.w = detail::required<double>(j, "w", ctx);
  b.h = detail::optional<double>(j, "h", 1.0, ctx);
  b.yaw = detail::required<double>(j, "yaw", ctx);
  return b;
}

/// One JSON object per line: {"frame"?, "score", "x", "y", "z", "l", "w", "h", "yaw"}.
/// Blank lines are skipped. `need_score` is false for ground truth.
inline std::vector<Detection> detections_from_jsonl(std::string_view text, bool need_score = true) {
  std::vector<Detection> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    const std::string ctx = "jsonl line " + std::to_string(line_no);
    const json j = parse_json(line, ctx);
    Detection d;
    d.frame = detail::optional<long>(j, "frame", 0, ctx);
    d.score = need_score ? detail::required<double>(j, "score", ctx) : detail::optional<double>(j, "score", 1.0, ctx);
    d.box = box_from_json(j, ctx);
    out.push_back(d);
    if (end == text.size()) break;
  }
  return out;
}

inline std::vector<GroundTruth> ground_truth_from_jsonl(std::string_view text) {
  std::vector<GroundTruth> out;
  for (const auto& d : detections_from_jsonl(text, false)) out.push_back({d.frame, d.box});
  return out;
}

inline std::string detections_to_jsonl(const std::vector<Detection>& dets) {
  std::string out;
  for (const auto& d : dets) {
    const json j = {{"frame", d.frame}, {"score", d.score}, {"x", d.box.x}, {"y", d.box.y}, {"z", d.box.z},
                    {"l", d.box.l},     {"w", d.box.w},         {"h", d.box.h}, {"yaw", d.box.yaw}};
    out += j.dump() + "\n";
  }
  return out;
}

/// Header plus one row per point; values printed with 17 significant digits.
inline std::string points_to_csv(const std::vector<RadarPoint>& points) {
  std::ostringstream ss;
  ss << "x,y,z,speed,intensity\n" << std::setprecision(17);
  for (const auto& p : points) ss << p.x << ',' << p.y << ',' << p.z << ',' << p.radial_speed << ',' << p.intensity << '\n';
  return ss.str();
}

inline std::vector<RadarPoint> points_from_csv(std::string_view text) {
  std::vector<RadarPoint> out;
  std::istringstream ss{std::string(text)};
  std::string line;
  if (!std::getline(ss, line) || line.rfind("x,y,z,speed,intensity", 0) != 0)
    throw InputError("points csv: missing header");
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    RadarPoint p{};
    char c1, c2, c3, c4;
    std::istringstream row(line);
    if (!(row >> p.x >> c1 >> p.y >> c2 >> p.z >> c3 >> p.radial_speed >> c4 >> p.intensity))
      throw InputError("points csv: malformed row \"" + line + "\"");
    out.push_back(p);
  }
  return out;
}

namespace detail {
inline container::NamedTensor matrix_record(const std::string& name, const Matrix& m) {
  container::NamedTensor rec{name, {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, {}};
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) rec.values.push_back(m(i, k));
  return rec;
}
inline container::NamedTensor vector_record(const std::string& name, const RowVector& v) {
  container::NamedTensor rec{name, {static_cast<std::size_t>(v.size())}, {}};
  for (Eigen::Index i = 0; i < v.size(); ++i) rec.values.push_back(v(i));
  return rec;
}
}  // namespace detail

/// Records "<prefix>.n_heads", "<prefix>.w_query", ..., "<prefix>.b_output".
inline std::vector<container::NamedTensor> params_to_records(const AttentionParams& p, const std::string& prefix) {
  return {{prefix + ".n_heads", {1}, {static_cast<double>(p.n_heads)}},
          detail::matrix_record(prefix + ".w_query", p.w_query),
          detail::matrix_record(prefix + ".w_key", p.w_key),
          detail::matrix_record(prefix + ".w_value", p.w_value),
          detail::matrix_record(prefix + ".w_output", p.w_output),
          detail::vector_record(prefix + ".b_query", p.b_query),
          detail::vector_record(prefix + ".b_key", p.b_key),
          detail::vector_record(prefix + ".b_value", p.b_value),
          detail::vector_record(prefix + ".b_output", p.b_output)};
}

inline AttentionParams params_from_records(const std::vector<container::NamedTensor>& records,
                                           const std::string& prefix) {
  auto find = [&](const std::string& suffix) -> const container::NamedTensor& {
    for (const auto& r : records)
      if (r.name == prefix + "." + suffix) return r;
    throw InputError("params: missing record " + prefix + "." + suffix);
  };
  const auto& heads = find("n_heads");
  if (heads.values.size() != 1) throw InputError("params: malformed n_heads record");
  const auto& wq = find("w_query");
  if (wq.shape.size() != 2 || wq.shape[0] != wq.shape[1]) throw InputError("params: w_query must be square");
  const std::size_t d = wq.shape[0];
  AttentionParams p = AttentionParams::zeros(d, static_cast<std::size_t>(heads.values[0]));
  auto load_matrix = [&](const char* name, Matrix& m) {
    const auto& r = find(name);
    if (r.shape != std::vector<std::size_t>{d, d}) throw InputError(std::string("params: bad shape for ") + name);
    for (std::size_t i = 0; i < d * d; ++i) m(static_cast<Eigen::Index>(i / d), static_cast<Eigen::Index>(i % d)) = r.values[i];
  };
  auto load_vector = [&](const char* name, RowVector& v) {
    const auto& r = find(name);
    if (r.shape != std::vector<std::size_t>{d}) throw InputError(std::string("params: bad shape for ") + name);
    for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i)) = r.values[i];
  };
  load_matrix("w_query", p.w_query);
  load_matrix("w_key", p.w_key);
  load_matrix("w_value", p.w_value);
  load_matrix("w_output", p.w_output);
  load_vector("b_query", p.b_query);
  load_vector("b_key", p.b_key);
  load_vector("b_value", p.b_value);
  load_vector("b_output", p.b_output);
  try {
    p.validate();
  } catch (const ContractViolation& e) {
    throw InputError(std::string("params: ") + e.what());
  }
  return p;
}

}  // namespace echo_polar::io
