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

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "echo_polar/errors.hpp"
#include "echo_polar/spectrum.hpp"
#include "echo_polar/tensor.hpp"

// Little-endian tensor container.
//
//   header (16 bytes): magic "ECHOPOLR" | u32 format version | u32 kind
//   kind 1, ADC cube:  u32 n_rx | u32 n_chirps | u32 n_samples | f32 re,im ...
//   kind 2, spectrum:  u32 stage | u32 virtual_channels | f64 wavelength |
//                      u32 n_axes | n_axes x (u32 kind | u32 length | f64 step |
//                      u32 unit_len | unit bytes) | f32 re,im ...
//   kind 3, records:   u32 n_records | n_records x (u32 name_len | name |
//                      u32 rank | rank x u32 dim | f64 values ...)

namespace echo_polar::container {

inline constexpr std::array<char, 8> kMagic{'E', 'C', 'H', 'O', 'P', 'O', 'L', 'R'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class Kind : std::uint32_t { adc_cube = 1, spectrum = 2, records = 3 };

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  void header(Kind kind) {
    buf_.append(kMagic.data(), kMagic.size());
    u32(kFormatVersion);
    u32(static_cast<std::uint32_t>(kind));
  }
  void complex_data(const Tensor<std::complex<double>>& t) {
    for (const auto& v : t.flat()) {
      f32(static_cast<float>(v.real()));
      f32(static_cast<float>(v.imag()));
    }
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view buf) : buf_(buf) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void header(Kind expected) {
    if (buf_.size() < 16 || std::memcmp(buf_.data(), kMagic.data(), kMagic.size()) != 0)
      throw ContainerError("container: bad magic bytes");
    pos_ = 8;
    const auto version = u32();
    if (version != kFormatVersion)
      throw ContainerError("container: unsupported format version " + std::to_string(version));
    const auto kind = u32();
    if (kind != static_cast<std::uint32_t>(expected))
      throw ContainerError("container: kind " + std::to_string(kind) + ", expected " +
                           std::to_string(static_cast<std::uint32_t>(expected)));
  }
  Tensor<std::complex<double>> complex_data(std::vector<std::size_t> shape) {
    const std::size_t n = Tensor<int>::element_count(shape);
    need(n * 8);
    Tensor<std::complex<double>> t(std::move(shape));
    for (auto& v : t.flat()) {
      const float re = f32();
      const float im = f32();
      v = {re, im};
    }
    return t;
  }
  void expect_end() const {
    if (pos_ != buf_.size()) throw ContainerError("container: trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ContainerError("container: truncated payload");
  }
  std::string_view buf_;
  std::size_t pos_ = 0;
};

/// Peeks at the kind field without validating the payload.
inline Kind peek_kind(std::string_view buf) {
  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0)
    throw ContainerError("container: bad magic bytes");
  Reader r(buf.substr(12, 4));
  return static_cast<Kind>(r.u32());
}

inline std::string encode_adc(const Tensor<std::complex<double>>& cube) {
  require(cube.rank() == 3, "encode_adc: cube must be rank 3");
  Writer w;
  w.header(Kind::adc_cube);
  for (std::size_t a = 0; a < 3; ++a) w.u32(static_cast<std::uint32_t>(cube.extent(a)));
  w.complex_data(cube);
  return w.take();
}

inline Tensor<std::complex<double>> decode_adc(std::string_view buf) {
  Reader r(buf);
  r.header(Kind::adc_cube);
  std::vector<std::size_t> shape(3);
  for (auto& s : shape) s = r.u32();
  auto t = r.complex_data(std::move(shape));
  r.expect_end();
  return t;
}

inline std::string encode_spectrum(const Spectrum& s) {
  s.validate();
  Writer w;
  w.header(Kind::spectrum);
  w.u32(static_cast<std::uint32_t>(s.stage));
  w.u32(s.virtual_channels ? 1 : 0);
  w.f64(s.wavelength);
  w.u32(static_cast<std::uint32_t>(s.axes.size()));
  for (const auto& a : s.axes) {
    w.u32(static_cast<std::uint32_t>(a.kind));
    w.u32(static_cast<std::uint32_t>(a.length));
    w.f64(a.step);
    w.u32(static_cast<std::uint32_t>(a.unit.size()));
    w.bytes(a.unit);
  }
  w.complex_data(s.data);
  return w.take();
}

inline Spectrum decode_spectrum(std::string_view buf) {
  Reader r(buf);
  r.header(Kind::spectrum);
  Spectrum s;
  const auto stage = r.u32();
  if (stage < 1 || stage > 4) throw ContainerError("container: unknown stage tag " + std::to_string(stage));
  s.stage = static_cast<Stage>(stage);
  s.virtual_channels = r.u32() != 0;
  s.wavelength = r.f64();
  const auto n_axes = r.u32();
  if (n_axes > 8) throw ContainerError("container: implausible axis count");
  std::vector<std::size_t> shape;
  for (std::uint32_t i = 0; i < n_axes; ++i) {
    Axis a;
    const auto kind = r.u32();
    if (kind > 6) throw ContainerError("container: unknown axis kind");
    a.kind = static_cast<AxisKind>(kind);
    a.length = r.u32();
    a.step = r.f64();
    a.unit = r.bytes(r.u32());
    shape.push_back(a.length);
    s.axes.push_back(std::move(a));
  }
  s.data = r.complex_data(std::move(shape));
  r.expect_end();
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ContainerError(std::string("container: ") + e.what());
  }
  return s;
}

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const NamedTensor&) const = default;
};

inline std::string encode_records(const std::vector<NamedTensor>& records) {
  Writer w;
  w.header(Kind::records);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    require(rec.values.size() == Tensor<int>::element_count(rec.shape), "encode_records: shape/value mismatch");
    w.u32(static_cast<std::uint32_t>(rec.name.size()));
    w.bytes(rec.name);
    w.u32(static_cast<std::uint32_t>(rec.shape.size()));
    for (auto d : rec.shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : rec.values) w.f64(v);
  }
  return w.take();
}

inline std::vector<NamedTensor> decode_records(std::string_view buf) {
  Reader r(buf);
  r.header(Kind::records);
  const auto n = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    NamedTensor rec;
    rec.name = r.bytes(r.u32());
    const auto rank = r.u32();
    if (rank > 8) throw ContainerError("container: implausible record rank");
    for (std::uint32_t k = 0; k < rank; ++k) rec.shape.push_back(r.u32());
    const std::size_t count = Tensor<int>::element_count(rec.shape);
    if (count > buf.size()) throw ContainerError("container: truncated payload");
    rec.values.resize(count);
    for (auto& v : rec.values) v = r.f64();
    out.push_back(std::move(rec));
  }
  r.expect_end();
  return out;
}

}  // namespace echo_polar::container
