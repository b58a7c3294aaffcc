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

// Umbrella header.

#include "echo_polar/attention.hpp"
#include "echo_polar/box_codec.hpp"
#include "echo_polar/cfar.hpp"
#include "echo_polar/container.hpp"
#include "echo_polar/errors.hpp"
#include "echo_polar/fft.hpp"
#include "echo_polar/fmcw_sim.hpp"
#include "echo_polar/fusion.hpp"
#include "echo_polar/io.hpp"
#include "echo_polar/metrics.hpp"
#include "echo_polar/pipeline.hpp"
#include "echo_polar/polar_geometry.hpp"
#include "echo_polar/spectrum.hpp"
#include "echo_polar/tensor.hpp"
