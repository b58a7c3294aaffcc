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

#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "echo_polar/echo_polar.hpp"

namespace echo_polar::cli {

namespace {

using io::json;

RadarConfig load_config(const path& p) {
  return io::config_from_document(io::parse_json(io::read_file(p), p.string()));
}

AdcCube load_adc(const path& in, const RadarConfig& cfg) {
  AdcCube cube{container::decode_adc(io::read_file(in)), cfg};
  const auto& s = cube.data.shape();
  if (s[0] != cfg.n_rx || s[1] != cfg.n_chirps || s[2] != cfg.n_samples)
    throw InputError("adc " + in.string() + " has dims " + shape_string(s) + ", config expects (" +
                     std::to_string(cfg.n_rx) + "," + std::to_string(cfg.n_chirps) + "," +
                     std::to_string(cfg.n_samples) + ")");
  return cube;
}

WindowKind parse_window(const std::string& name) {
  if (name == "hann") return WindowKind::hann;
  if (name == "hamming") return WindowKind::hamming;
  if (name == "rect" || name == "rectangular") return WindowKind::rectangular;
  throw InputError("unknown window \"" + name + "\"");
}

std::uint64_t fnv1a(const Tensor<double>& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : t.flat()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

json checksum(const Tensor<double>& t) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(t)));
  double sum = 0;
  for (double v : t.flat()) sum += v;
  return {{"fnv1a64", hex}, {"sum", sum}};
}

std::string emit(const json& report, const std::optional<path>& out) {
  const std::string text = report.dump(2) + "\n";
  if (out) io::write_file(*out, text);
  return text;
}

Tensor<double> uniform_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  Tensor<double> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (auto& v : t.flat()) v = uni(rng);
  return t;
}

std::vector<RangeBucket> parse_buckets(const std::string& spec) {
  std::vector<RangeBucket> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos || dash == 0) throw InputError("bucket \"" + item + "\" is not lo-hi");
    try {
      out.push_back({std::stod(item.substr(0, dash)), std::stod(item.substr(dash + 1))});
    } catch (const std::exception&) {
      throw InputError("bucket \"" + item + "\" is not lo-hi");
    }
    if (!(out.back().hi > out.back().lo)) throw InputError("bucket \"" + item + "\" is empty");
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = i + 1; k < out.size(); ++k)
      if (out[i].lo < out[k].hi && out[k].lo < out[i].hi) throw InputError("range buckets overlap");
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json bucketed(const BucketedMetric& m) {
  json j = {{"overall", optional_number(m.overall)}};
  for (const auto& [b, v] : m.buckets) j[b.name()] = optional_number(v);
  return j;
}

json grid_json(const PolarGrid& g) {
  return {{"n_range", g.n_range}, {"n_azimuth", g.n_azimuth}, {"channels", g.channels}, {"r_min", g.r_min},
          {"r_max", g.r_max},     {"phi_min", g.phi_min},     {"phi_max", g.phi_max}};
}

json drift_json(const PolarGrid& g, const CalibrationSet& calib, double z_lo, double z_hi) {
  double max_drift = 0, max_bound = 0, max_ratio = 0;
  std::size_t evaluated = 0;
  bool within = true;
  for (std::size_t r = 0; r < g.n_range; ++r)
    for (std::size_t a = 0; a < g.n_azimuth; ++a) {
      const double rc = g.range_center(r), ac = g.azimuth_center(a);
      const auto drift = column_drift(rc, ac, z_lo, z_hi, calib);
      const auto bound = first_order_drift_bound(rc, ac, z_lo, z_hi, calib);
      if (!drift || !bound) continue;
      ++evaluated;
      max_drift = std::max(max_drift, *drift);
      max_bound = std::max(max_bound, *bound);
      if (*bound > 0) max_ratio = std::max(max_ratio, *drift / *bound);
      if (*drift > *bound * 1.1) within = false;
    }
  return {{"z_range", {z_lo, z_hi}},         {"pillars", evaluated},          {"max_drift_px", max_drift},
          {"max_first_order_bound_px", max_bound}, {"max_drift_to_bound", max_ratio}, {"within_bound", within}};
}

json residual_json(const CalibrationSet& calib) {
  const auto res = column_condition(calib.rotation);
  return {{"c1_sq", res.c1_sq}, {"c3_sq", res.c3_sq}, {"tolerance", kColumnConditionTolerance},
          {"holds", res.holds(kColumnConditionTolerance)}};
}

}  // namespace

void cmd_simulate(const SimulateOptions& opt) {
  auto doc = io::scene_from_json(io::parse_json(io::read_file(opt.config), opt.config.string()));
  if (opt.seed) doc.config.rng_seed = *opt.seed;
  const AdcCube cube = synthesize_adc(doc.scene, doc.config);
  io::write_file(opt.out, container::encode_adc(cube.data));
}

void cmd_fft(const FftOptions& opt) {
  const RadarConfig cfg = load_config(opt.config);
  const AdcCube cube = load_adc(opt.in, cfg);
  ChainSettings s;
  s.fast_time_window.kind = s.slow_time_window.kind = parse_window(opt.window);
  Spectrum out = range_fft(cube, s.fast_time_window);
  if (opt.stage != "rt") {
    out = virtual_rd(out, cfg, s);
    if (opt.stage == "read" || opt.stage == "ra") out = angle_fft(out, opt.n_azimuth);
    if (opt.stage == "ra") out = compress_to_ra(out);
    else if (opt.stage != "rd" && opt.stage != "read") throw InputError("unknown stage \"" + opt.stage + "\"");
  }
  io::write_file(opt.out, container::encode_spectrum(out));
}

void cmd_cfar(const CfarOptions& opt) {
  const RadarConfig cfg = load_config(opt.config);
  const std::string bytes = io::read_file(opt.in);
  ChainSettings s;
  s.cfar = opt.cfar;
  s.n_azimuth_bins = opt.n_azimuth;
  Spectrum rd;
  if (container::peek_kind(bytes) == container::Kind::adc_cube) {
    rd = virtual_rd(range_fft(load_adc(opt.in, cfg), s.fast_time_window), cfg, s);
  } else {
    rd = container::decode_spectrum(bytes);
  }
  io::write_file(opt.out, io::points_to_csv(point_cloud(rd, cfg, s)));
}

void cmd_chain(const ChainOptions& opt) {
  static const std::vector<std::string> stages{"rt", "rd", "ra", "points", "all"};
  if (std::find(stages.begin(), stages.end(), opt.stage) == stages.end())
    throw InputError("unknown stage \"" + opt.stage + "\"");
  const RadarConfig cfg = load_config(opt.config);
  const AdcCube cube = load_adc(opt.in, cfg);
  std::filesystem::create_directories(opt.out_dir);
  const bool all = opt.stage == "all";
  ChainSettings s;
  s.cfar = opt.cfar;
  s.n_azimuth_bins = opt.n_azimuth;

  const Spectrum rt = range_fft(cube, s.fast_time_window);
  if (all || opt.stage == "rt") io::write_file(opt.out_dir / "rt.bin", container::encode_spectrum(rt));
  if (opt.stage == "rt") return;
  const Spectrum rd = virtual_rd(rt, cfg, s);
  if (all || opt.stage == "rd") io::write_file(opt.out_dir / "rd.bin", container::encode_spectrum(rd));
  if (all || opt.stage == "ra")
    io::write_file(opt.out_dir / "ra.bin", container::encode_spectrum(compress_to_ra(angle_fft(rd, opt.n_azimuth))));
  if (all || opt.stage == "points") io::write_file(opt.out_dir / "points.csv", io::points_to_csv(point_cloud(rd, cfg, s)));
}

std::string cmd_project(const ProjectOptions& opt) {
  const CalibrationSet calib = io::calibration_from_json(io::parse_json(io::read_file(opt.calib), opt.calib.string()));
  PolarGrid grid{opt.n_range, opt.n_azimuth, 0, opt.r_min, opt.r_max, opt.phi_min, opt.phi_max, 0};
  grid.validate();
  json columns = json::array();
  for (std::size_t r = 0; r < grid.n_range; ++r) {
    json row = json::array();
    for (std::size_t a = 0; a < grid.n_azimuth; ++a)
      row.push_back(optional_number(column_of_query(grid.range_center(r), grid.azimuth_center(a), 0.0, calib)));
    columns.push_back(std::move(row));
  }
  const json report = {{"tool_version", kToolVersion},
                       {"grid", grid_json(grid)},
                       {"column_condition", residual_json(calib)},
                       {"z_ref", 0.0},
                       {"columns", std::move(columns)},
                       {"column_drift", drift_json(grid, calib, opt.z_lo, opt.z_hi)}};
  return emit(report, opt.out);
}

std::string cmd_fuse_demo(const FuseDemoOptions& opt) {
  CalibrationSet calib;
  if (opt.calib) {
    calib = io::calibration_from_json(io::parse_json(io::read_file(*opt.calib), opt.calib->string()));
  } else {
    calib.rotation = radial_rotation();
    const double w = static_cast<double>(opt.image_width), h = static_cast<double>(opt.image_height);
    calib.intrinsics = {0.625 * w, 0.625 * w, w / 2, h / 2};
  }
  PolarGrid grid{opt.n_range, opt.n_azimuth, opt.channels, 2.0, 102.0, -0.6, 0.6, 0};
  grid.validate();
  if (opt.heads == 0 || opt.channels % opt.heads != 0)
    throw InputError("fuse-demo: channels must be divisible by heads");

  json warnings = json::array();
  const auto residual = column_condition(calib.rotation);
  if (!residual.holds(kColumnConditionTolerance))
    warnings.push_back("calibration fails the column condition; columns are projected per query");

  QueryTensor q{uniform_tensor({grid.n_range, grid.n_azimuth, grid.channels}, opt.seed * 16 + 1), grid,
                QueryState::initial};
  Tensor<double> image({opt.image_height, opt.image_width, opt.channels});
  Tensor<double> radar({grid.n_range, opt.chirps, opt.channels});
  if (!opt.zero_features) {
    image = uniform_tensor(image.shape(), opt.seed * 16 + 2);
    radar = uniform_tensor(radar.shape(), opt.seed * 16 + 3);
  }
  const auto image_params = AttentionParams::random(opt.channels, opt.heads, opt.seed * 16 + 4);
  const auto radar_params = AttentionParams::random(opt.channels, opt.heads, opt.seed * 16 + 5);
  if (opt.params_out) {
    auto records = io::params_to_records(image_params, "image");
    auto radar_records = io::params_to_records(radar_params, "radar");
    records.insert(records.end(), radar_records.begin(), radar_records.end());
    io::write_file(*opt.params_out, container::encode_records(records));
  }

  const ColumnMap columns = image_column_map(grid, calib, opt.image_width);
  const QueryTensor q_hat = fuse_image_columns(q, image, columns, image_params);
  const QueryTensor q_tilde = fuse_radar_rows(q_hat, radar, radar_params);

  std::size_t visible = 0;
  bool invisible_unchanged = true;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i]) {
      ++visible;
      continue;
    }
    for (std::size_t c = 0; c < grid.channels; ++c)
      if (q_hat.values[i * grid.channels + c] != q.values[i * grid.channels + c]) invisible_unchanged = false;
  }

  // Softmax sanity over the radar keys of range bin 0.
  double softmax_err = 0;
  {
    Matrix queries(static_cast<Eigen::Index>(grid.n_azimuth), static_cast<Eigen::Index>(grid.channels));
    Matrix kv(static_cast<Eigen::Index>(opt.chirps), static_cast<Eigen::Index>(grid.channels));
    for (std::size_t a = 0; a < grid.n_azimuth; ++a)
      for (std::size_t c = 0; c < grid.channels; ++c)
        queries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = q_hat.values(0, a, c);
    for (std::size_t t = 0; t < opt.chirps; ++t)
      for (std::size_t c = 0; c < grid.channels; ++c)
        kv(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = radar(0, t, c);
    AttentionCache cache;
    attention_forward(queries, kv, kv, radar_params, &cache);
    for (const auto& w : cache.weights)
      for (Eigen::Index i = 0; i < w.rows(); ++i) softmax_err = std::max(softmax_err, std::abs(w.row(i).sum() - 1.0));
  }

  const json report = {
      {"tool_version", kToolVersion},
      {"seed", opt.seed},
      {"grid", grid_json(grid)},
      {"image", {{"height", opt.image_height}, {"width", opt.image_width}}},
      {"chirp_count", opt.chirps},
      {"heads", opt.heads},
      {"zero_features", opt.zero_features},
      {"calibration", io::calibration_to_json(calib)},
      {"column_condition", residual_json(calib)},
      {"column_drift", drift_json(grid, calib, -2.0, 2.0)},
      {"warnings", warnings},
      {"visible_queries", visible},
      {"checksums",
       {{"q_initial", checksum(q.values)}, {"q_image_fused", checksum(q_hat.values)},
        {"q_radar_fused", checksum(q_tilde.values)}}},
      {"invariants",
       {{"invisible_queries_unchanged", invisible_unchanged}, {"softmax_row_sum_max_error", softmax_err}}}};
  return emit(report, opt.out);
}

std::string cmd_eval(const EvalOptions& opt) {
  const auto preds = io::detections_from_jsonl(io::read_file(opt.pred));
  const auto gts = io::ground_truth_from_jsonl(io::read_file(opt.gt));
  const auto buckets = parse_buckets(opt.buckets);
  if (!(opt.iou > 0 && opt.iou <= 1)) throw InputError("eval: --iou must lie in (0, 1]");
  if (opt.let < 0) throw InputError("eval: --let must be nonnegative");

  json report = {{"tool_version", kToolVersion}, {"n_predictions", preds.size()}, {"n_ground_truth", gts.size()}};
  if (opt.protocol == "waymo_ap") {
    report["protocol"] = "waymo_ap";
    report["iou_threshold"] = opt.iou;
    report["bev_ap"] = bucketed(average_precision(preds, gts, bev_iou_fn(), opt.iou, buckets));
    report["bev_recall"] = bucketed(recall_at(preds, gts, opt.iou, buckets));
    if (opt.let > 0) {
      report["let_tolerance"] = opt.let;
      report["let_bev_ap"] = bucketed(average_precision(preds, gts, let_iou_fn(opt.let), opt.iou, buckets));
    }
  } else if (opt.protocol == "radial" || opt.protocol == "radial_point") {
    const auto m = radial_point_metrics(preds, gts);
    report["protocol"] = "radial";
    report["iou_threshold"] = kRadialIouThreshold;
    report["ap"] = m.ap;
    report["ar"] = m.ar;
    report["f1"] = m.f1;
    report["range_error_m"] = optional_number(m.range_error);
    report["azimuth_error_deg"] = optional_number(m.azimuth_error);
  } else if (opt.protocol == "nuscenes" || opt.protocol == "nuscenes_errors") {
    const auto pairs = matched_pairs(preds, gts, bev_iou_fn(), opt.iou);
    const auto e = nuscenes_errors(pairs);
    report["protocol"] = "nuscenes";
    report["iou_threshold"] = opt.iou;
    report["matches"] = pairs.size();
    report["ate"] = e ? json(e->ate) : json(nullptr);
    report["ase"] = e ? json(e->ase) : json(nullptr);
    report["aoe"] = e ? json(e->aoe) : json(nullptr);
  } else {
    throw InputError("eval: unknown protocol \"" + opt.protocol + "\"");
  }
  return emit(report, opt.out);
}

namespace {

void add_cfar_options(CLI::App* cmd, CfarConfig& cfg, std::string& guard, std::string& train) {
  cmd->add_option("--guard", guard, "Guard cells range,doppler")->default_val("2,2");
  cmd->add_option("--train", train, "Training cells range,doppler")->default_val("4,4");
  cmd->add_option("--alpha", cfg.threshold_factor, "Threshold factor")->default_val(cfg.threshold_factor);
  cmd->add_option("--separation", cfg.min_peak_separation, "Peak reduction radius in bins")
      ->default_val(cfg.min_peak_separation);
}

CellCounts parse_pair(const std::string& s, const char* what) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    const long a = std::stol(s.substr(0, comma)), b = std::stol(s.substr(comma + 1));
    if (a < 0 || b < 0) throw std::invalid_argument(s);
    return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
  } catch (const std::exception&) {
    throw InputError(std::string("--") + what + " expects two nonnegative integers a,b");
  }
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& s) {
  const auto c = parse_pair(s, "grid");
  if (c.range == 0 || c.doppler == 0) throw InputError("--grid dimensions must be positive");
  return {c.range, c.doppler};
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"echo-polar: FMCW radar chain, polar BEV geometry, fusion attention and BEV metrics"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  SimulateOptions sim;
  std::uint64_t sim_seed = 0;
  auto* c_sim = app.add_subcommand("simulate", "Synthesize an ADC cube from a scene JSON");
  c_sim->add_option("--config,scene", sim.config, "Scene JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "Output ADC container")->required();
  auto* sim_seed_opt = c_sim->add_option("--seed", sim_seed, "Override the noise seed");

  FftOptions fft_opt;
  auto* c_fft = app.add_subcommand("fft", "Run the FFT chain up to a stage");
  c_fft->add_option("--in", fft_opt.in, "ADC container")->required()->check(CLI::ExistingFile);
  c_fft->add_option("--config", fft_opt.config, "Scene or config JSON")->required()->check(CLI::ExistingFile);
  c_fft->add_option("--stage", fft_opt.stage, "rt|rd|read|ra")
      ->check(CLI::IsMember({"rt", "rd", "read", "ra"}))
      ->default_val("rd");
  c_fft->add_option("--out", fft_opt.out, "Output spectrum container")->required();
  c_fft->add_option("--azimuth-bins", fft_opt.n_azimuth, "Angle FFT length")->default_val(64);
  c_fft->add_option("--window", fft_opt.window, "hann|hamming|rect")->default_val("hann");

  CfarOptions cfar_opt;
  std::string cfar_guard, cfar_train;
  auto* c_cfar = app.add_subcommand("cfar", "CA-CFAR on an RD spectrum, points as CSV");
  c_cfar->add_option("--in", cfar_opt.in, "RD spectrum or ADC container")->required()->check(CLI::ExistingFile);
  c_cfar->add_option("--config", cfar_opt.config, "Scene or config JSON")->required()->check(CLI::ExistingFile);
  c_cfar->add_option("--out", cfar_opt.out, "Output CSV")->required();
  c_cfar->add_option("--azimuth-bins", cfar_opt.n_azimuth, "Angle FFT length")->default_val(64);
  add_cfar_options(c_cfar, cfar_opt.cfar, cfar_guard, cfar_train);

  ChainOptions chain_opt;
  std::string chain_guard, chain_train;
  auto* c_chain = app.add_subcommand("chain", "ADC -> RT -> RD -> RA and point cloud");
  c_chain->add_option("--in", chain_opt.in, "ADC container")->required()->check(CLI::ExistingFile);
  c_chain->add_option("--config", chain_opt.config, "Scene or config JSON")->required()->check(CLI::ExistingFile);
  c_chain->add_option("--out", chain_opt.out_dir, "Output directory")->required();
  c_chain->add_option("--stage", chain_opt.stage, "rt|rd|ra|points|all")
      ->check(CLI::IsMember({"rt", "rd", "ra", "points", "all"}))
      ->default_val("all");
  c_chain->add_option("--azimuth-bins", chain_opt.n_azimuth, "Angle FFT length")->default_val(64);
  add_cfar_options(c_chain, chain_opt.cfar, chain_guard, chain_train);

  ProjectOptions proj;
  std::string proj_grid = "16,32";
  std::string proj_out;
  auto* c_proj = app.add_subcommand("project", "Project the polar grid into image columns");
  c_proj->add_option("--calib", proj.calib, "Calibration JSON")->required()->check(CLI::ExistingFile);
  c_proj->add_option("--grid", proj_grid, "R_l,A_l")->default_val("16,32");
  c_proj->add_option("--r-min", proj.r_min)->default_val(proj.r_min);
  c_proj->add_option("--r-max", proj.r_max)->default_val(proj.r_max);
  c_proj->add_option("--phi-min", proj.phi_min)->default_val(proj.phi_min);
  c_proj->add_option("--phi-max", proj.phi_max)->default_val(proj.phi_max);
  c_proj->add_option("--out", proj_out, "Report path (stdout if omitted)");

  FuseDemoOptions fuse;
  std::string fuse_grid = "16,32";
  std::string fuse_calib, fuse_out, fuse_params;
  auto* c_fuse = app.add_subcommand("fuse-demo", "Seeded polar-aligned fusion forward pass");
  c_fuse->add_option("--seed", fuse.seed)->default_val(0);
  c_fuse->add_option("--grid", fuse_grid, "R_l,A_l")->default_val("16,32");
  c_fuse->add_option("--channels", fuse.channels)->default_val(fuse.channels);
  c_fuse->add_option("--heads", fuse.heads)->default_val(fuse.heads);
  c_fuse->add_option("--image-height", fuse.image_height)->default_val(fuse.image_height);
  c_fuse->add_option("--image-width", fuse.image_width)->default_val(fuse.image_width);
  c_fuse->add_option("--chirps", fuse.chirps)->default_val(fuse.chirps);
  c_fuse->add_option("--calib", fuse_calib, "Calibration JSON in feature-map pixels")->check(CLI::ExistingFile);
  c_fuse->add_flag("--zero-features", fuse.zero_features, "Use all-zero image and radar features");
  c_fuse->add_option("--out", fuse_out, "Report path (stdout if omitted)");
  c_fuse->add_option("--params-out", fuse_params, "Write attention parameters container");

  EvalOptions ev;
  std::string ev_out;
  auto* c_eval = app.add_subcommand("eval", "BEV detection metrics");
  c_eval->add_option("--pred", ev.pred, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--gt", ev.gt, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--protocol", ev.protocol, "waymo_ap|radial|nuscenes")->default_val("waymo_ap");
  c_eval->add_option("--iou", ev.iou)->default_val(ev.iou);
  c_eval->add_option("--let", ev.let, "LET tolerance as a fraction of range")->default_val(ev.let);
  c_eval->add_option("--buckets", ev.buckets)->default_val(ev.buckets);
  c_eval->add_option("--out", ev_out, "Report path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (c_sim->parsed()) {
      if (*sim_seed_opt) sim.seed = sim_seed;
      cmd_simulate(sim);
    } else if (c_fft->parsed()) {
      cmd_fft(fft_opt);
    } else if (c_cfar->parsed()) {
      cfar_opt.cfar.guard = parse_pair(cfar_guard, "guard");
      cfar_opt.cfar.training = parse_pair(cfar_train, "train");
      cmd_cfar(cfar_opt);
    } else if (c_chain->parsed()) {
      chain_opt.cfar.guard = parse_pair(chain_guard, "guard");
      chain_opt.cfar.training = parse_pair(chain_train, "train");
      cmd_chain(chain_opt);
    } else if (c_proj->parsed()) {
      std::tie(proj.n_range, proj.n_azimuth) = parse_dims(proj_grid);
      if (!proj_out.empty()) proj.out = proj_out;
      const auto text = cmd_project(proj);
      if (!proj.out) std::cout << text;
    } else if (c_fuse->parsed()) {
      std::tie(fuse.n_range, fuse.n_azimuth) = parse_dims(fuse_grid);
      if (!fuse_calib.empty()) fuse.calib = fuse_calib;
      if (!fuse_out.empty()) fuse.out = fuse_out;
      if (!fuse_params.empty()) fuse.params_out = fuse_params;
      const auto text = cmd_fuse_demo(fuse);
      if (!fuse.out) std::cout << text;
    } else if (c_eval->parsed()) {
      if (!ev_out.empty()) ev.out = ev_out;
      const auto text = cmd_eval(ev);
      if (!ev.out) std::cout << text;
    }
  } catch (const InputError& e) {
    std::cerr << "echo-polar: input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ContractViolation& e) {
    std::cerr << "echo-polar: contract violation: " << e.what() << "\n";
    return kExitContractViolation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "echo-polar: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace echo_polar::cli
