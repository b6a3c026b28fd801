// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "namegauge/error.hpp"
#include "namegauge/io.hpp"

namespace namegauge {

/// Mono audio, samples in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class SampleFormat { kPcm16, kPcm24, kPcm32, kFloat32 };

namespace detail {

inline constexpr std::uint16_t kWaveFormatPcm = 1;
inline constexpr std::uint16_t kWaveFormatFloat = 3;
inline constexpr std::uint16_t kWaveFormatExtensible = 0xFFFE;

inline double read_sample(const std::uint8_t* p, std::uint16_t format, int bits) {
  if (format == kWaveFormatFloat) {
    float f;
    std::memcpy(&f, p, 4);
    if (!std::isfinite(f)) fail(ErrorKind::kNumeric, "non-finite float sample in WAV data");
    return std::clamp(static_cast<double>(f), -1.0, 1.0);
  }
  switch (bits) {
    case 16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;
      return v / 8388608.0;
    }
    default: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v / 2147483648.0;
    }
  }
}

}  // namespace detail

/// Decodes a RIFF/WAVE file holding 16/24/32-bit integer PCM or 32-bit float,
/// mono or stereo. Stereo is mixed down by averaging the two channels.
inline AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  const auto riff = r.get_string(4, "RIFF header");
  if (riff != "RIFF") {
    fail(ErrorKind::kFormat, "unsupported container '" + riff + "' (expected RIFF)");
  }
  r.get<std::uint32_t>("RIFF size");
  if (r.get_string(4, "WAVE tag") != "WAVE") {
    fail(ErrorKind::kFormat, "RIFF file is not WAVE");
  }

  bool have_fmt = false;
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  while (r.remaining() >= 8 && !have_data) {
    const auto id = r.get_string(4, "chunk id");
    const auto size = r.get<std::uint32_t>("chunk size");
    if (size > r.remaining()) {
      fail(ErrorKind::kFormat, "malformed WAV: chunk '" + id + "' runs past end of file");
    }
    const auto start = r.position();
    if (id == "fmt ") {
      if (size < 16) fail(ErrorKind::kFormat, "malformed WAV: fmt chunk too short");
      format = r.get<std::uint16_t>("format tag");
      channels = r.get<std::uint16_t>("channels");
      rate = r.get<std::uint32_t>("sample rate");
      r.get<std::uint32_t>("byte rate");
      block_align = r.get<std::uint16_t>("block align");
      bits = r.get<std::uint16_t>("bits per sample");
      if (format == detail::kWaveFormatExtensible) {
        if (size < 40) fail(ErrorKind::kFormat, "malformed WAV: short extensible fmt chunk");
        r.skip(8, "extensible header");
        format = r.get<std::uint16_t>("sub-format");
      }
      have_fmt = true;
      r.skip(size - (r.position() - start), "fmt chunk");
    } else if (id == "data") {
      data = bytes.subspan(start, size);
      have_data = true;
      r.skip(size, "data chunk");
    } else {
      r.skip(size, "chunk body");
    }
    if ((size & 1) && r.remaining() > 0 && !have_data) r.skip(1, "chunk pad");
  }
  if (!have_fmt) fail(ErrorKind::kFormat, "malformed WAV: no fmt chunk before data");
  if (!have_data) fail(ErrorKind::kFormat, "malformed WAV: no data chunk");
  const bool pcm_ok = format == detail::kWaveFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == detail::kWaveFormatFloat && bits == 32;
  if (!pcm_ok && !float_ok) {
    fail(ErrorKind::kFormat, "unsupported codec: format " + std::to_string(format) + ", " +
                                 std::to_string(bits) + " bits");
  }
  if (channels < 1 || channels > 2) {
    fail(ErrorKind::kFormat, "unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) fail(ErrorKind::kFormat, "malformed WAV: sample rate 0");
  const std::size_t width = bits / 8;
  if (block_align != width * channels) {
    fail(ErrorKind::kFormat, "malformed WAV: block align does not match format");
  }
  if (data.empty()) fail(ErrorKind::kFormat, "WAV data chunk is empty");
  const std::size_t frames = data.size() / block_align;
  if (frames == 0) fail(ErrorKind::kFormat, "WAV data chunk holds no complete frame");

  AudioBuffer out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const auto* frame = data.data() + i * block_align;
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      sum += detail::read_sample(frame + c * width, format, bits);
    }
    out.samples[i] = sum / channels;
  }
  return out;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  const auto bytes = io::read_bytes(path);
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

/// Encodes interleaved samples (channels x frames) as a canonical WAV file.
/// Integer formats round and saturate.
inline std::vector<std::uint8_t> encode_wav(std::span<const double> interleaved, int sample_rate,
                                            int channels, SampleFormat fmt) {
  const int bits = fmt == SampleFormat::kPcm16 ? 16 : fmt == SampleFormat::kPcm24 ? 24 : 32;
  const std::uint16_t tag =
      fmt == SampleFormat::kFloat32 ? detail::kWaveFormatFloat : detail::kWaveFormatPcm;
  const std::uint32_t width = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(interleaved.size() * width);
  io::ByteWriter w;
  w.put_bytes("RIFF");
  w.put<std::uint32_t>(36 + data_size);
  w.put_bytes("WAVE");
  w.put_bytes("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(tag);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sample_rate));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sample_rate) * channels * width);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(channels * width));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bits));
  w.put_bytes("data");
  w.put<std::uint32_t>(data_size);
  for (double s : interleaved) {
    if (fmt == SampleFormat::kFloat32) {
      w.put<float>(static_cast<float>(s));
      continue;
    }
    const double scale = std::ldexp(1.0, bits - 1);
    const auto v = static_cast<std::int64_t>(std::clamp(
        std::round(s * scale), -scale, scale - 1.0));
    if (bits == 16) {
      w.put<std::int16_t>(static_cast<std::int16_t>(v));
    } else if (bits == 24) {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(v & 0xFF));
      w.put<std::uint8_t>(static_cast<std::uint8_t>((v >> 8) & 0xFF));
      w.put<std::uint8_t>(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    } else {
      w.put<std::int32_t>(static_cast<std::int32_t>(v));
    }
  }
  return w.bytes();
}

/// Band-limited resampling with a Hann-windowed sinc kernel.
/// The output has round(n * target / source) samples.
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
  if (in.sample_rate <= 0 || target_rate <= 0) {
    fail(ErrorKind::kDomain, "sample rates must be positive");
  }
  if (in.sample_rate == target_rate) return in;

  constexpr double kZeroCrossings = 16.0;
  constexpr double kRolloff = 0.945;
  const double step = static_cast<double>(in.sample_rate) / target_rate;
  // Lowpass at the lower of the two Nyquist rates, in source-sample units.
  const double cutoff = kRolloff * std::min(1.0, 1.0 / step);
  const double half_width = kZeroCrossings / cutoff;

  const auto n = static_cast<std::ptrdiff_t>(in.samples.size());
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * target_rate / in.sample_rate));
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) * step;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (auto j = lo; j <= hi; ++j) {
      const double x = t - static_cast<double>(j);
      const double arg = std::numbers::pi * cutoff * x;
      const double sinc = x == 0.0 ? 1.0 : std::sin(arg) / arg;
      const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * x / half_width));
      acc += in.samples[static_cast<std::size_t>(j)] * cutoff * sinc * window;
    }
    out.samples[i] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

}  // namespace namegauge
