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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "echo_polar/cfar.hpp"

namespace echo_polar::cli {

using std::filesystem::path;

inline constexpr const char* kToolVersion = ECHO_POLAR_VERSION;

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitContractViolation = 3;

// Both squared z-coefficients must stay below this for the pillar-to-column
// shortcut to be considered valid.
inline constexpr double kColumnConditionTolerance = 1e-2;

struct SimulateOptions {
  path config;
  path out;
  std::optional<std::uint64_t> seed;
};

struct FftOptions {
  path in;
  path config;
  std::string stage = "rd";  // rt | rd | read | ra
  path out;
  std::size_t n_azimuth = 64;
  std::string window = "hann";
};

struct CfarOptions {
  path in;  // RD spectrum or ADC cube
  path config;
  path out;
  CfarConfig cfar;
  std::size_t n_azimuth = 64;
};

struct ChainOptions {
  path in;
  path config;
  path out_dir;
  std::string stage = "all";  // rt | rd | ra | points | all
  CfarConfig cfar;
  std::size_t n_azimuth = 64;
};

struct ProjectOptions {
  path calib;
  std::size_t n_range = 16;
  std::size_t n_azimuth = 32;
  double r_min = 1, r_max = 100;
  double phi_min = -0.6, phi_max = 0.6;
  double z_lo = -2, z_hi = 2;
  std::optional<path> out;
};

struct FuseDemoOptions {
  std::uint64_t seed = 0;
  std::size_t n_range = 16;
  std::size_t n_azimuth = 32;
  std::size_t channels = 32;
  std::size_t heads = 4;
  std::size_t image_height = 16;
  std::size_t image_width = 64;
  std::size_t chirps = 16;
  std::optional<path> calib;
  bool zero_features = false;
  std::optional<path> out;
  std::optional<path> params_out;
};

struct EvalOptions {
  path pred;
  path gt;
  std::string protocol = "waymo_ap";  // waymo_ap | radial | nuscenes
  double iou = 0.7;
  double let = 0.0;
  std::string buckets = "0-50,50-100";
  std::optional<path> out;
};

void cmd_simulate(const SimulateOptions& opt);
void cmd_fft(const FftOptions& opt);
void cmd_cfar(const CfarOptions& opt);
void cmd_chain(const ChainOptions& opt);
std::string cmd_project(const ProjectOptions& opt);
std::string cmd_fuse_demo(const FuseDemoOptions& opt);
std::string cmd_eval(const EvalOptions& opt);

/// Parses argv, dispatches and maps failures to exit codes.
int run(int argc, char** argv);

}  // namespace echo_polar::cli
