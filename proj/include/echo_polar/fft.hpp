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

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "echo_polar/errors.hpp"
#include "echo_polar/parallel.hpp"
#include "echo_polar/tensor.hpp"

namespace echo_polar {

using cplx = std::complex<double>;

namespace detail {

// fftw planning is not thread-safe; execution of an existing plan is.
class FftwPlanCache {
 public:
  static FftwPlanCache& instance() {
    static FftwPlanCache cache;
    return cache;
  }

  fftw_plan forward(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, plan);
    return plan;
  }

  ~FftwPlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  FftwPlanCache() = default;
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : n_(n), ptr_(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* get() noexcept { return ptr_; }
  cplx* as_complex() noexcept { return reinterpret_cast<cplx*>(ptr_); }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  fftw_complex* ptr_;
};

}  // namespace detail

/// Unnormalized forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N).
inline std::vector<cplx> fft(std::span<const cplx> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  detail::FftwBuffer in(n), out(n);
  std::copy(x.begin(), x.end(), in.as_complex());
  fftw_execute_dft(detail::FftwPlanCache::instance().forward(n), in.get(), out.get());
  return {out.as_complex(), out.as_complex() + n};
}

/// Applies `window` (empty = rectangular) then a forward FFT of length
/// `n_out >= extent(axis)` along `axis`, zero-padding the tail.
inline Tensor<cplx> fft_along(const Tensor<cplx>& in, std::size_t axis, std::size_t n_out,
                              std::span<const double> window = {}) {
  require(axis < in.rank(), "fft_along: axis out of range");
  const std::size_t n_in = in.extent(axis);
  require(n_out >= n_in && n_out > 0, "fft_along: output length shorter than input");
  require(window.empty() || window.size() == n_in, "fft_along: window length does not match axis");

  auto out_shape = in.shape();
  out_shape[axis] = n_out;
  Tensor<cplx> out(out_shape);

  const std::size_t in_stride = in.stride(axis);
  const std::size_t out_stride = out.stride(axis);
  // Lines are enumerated as (outer, inner) around the transformed axis.
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < in.rank(); ++a) inner *= in.extent(a);
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= in.extent(a);

  fftw_plan plan = detail::FftwPlanCache::instance().forward(n_out);
  parallel_for(outer, [&](std::size_t o) {
    detail::FftwBuffer buf_in(n_out), buf_out(n_out);
    cplx* src = buf_in.as_complex();
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t in_base = o * n_in * in_stride + i;
      const std::size_t out_base = o * n_out * out_stride + i;
      for (std::size_t n = 0; n < n_in; ++n) {
        const cplx v = in[in_base + n * in_stride];
        src[n] = window.empty() ? v : v * window[n];
      }
      for (std::size_t n = n_in; n < n_out; ++n) src[n] = cplx{};
      fftw_execute_dft(plan, buf_in.get(), buf_out.get());
      const cplx* dst = buf_out.as_complex();
      for (std::size_t k = 0; k < n_out; ++k) out[out_base + k * out_stride] = dst[k];
    }
  });
  return out;
}

/// Maps an FFT-ordered bin to its signed frequency index in [-n/2, n/2).
inline long signed_bin(std::size_t bin, std::size_t n) {
  const long b = static_cast<long>(bin);
  const long len = static_cast<long>(n);
  return b < (len + 1) / 2 ? b : b - len;
}

/// Inverse of signed_bin.
inline std::size_t unsigned_bin(long signed_index, std::size_t n) {
  const long len = static_cast<long>(n);
  return static_cast<std::size_t>(((signed_index % len) + len) % len);
}

}  // namespace echo_polar
