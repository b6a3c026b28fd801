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
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "namegauge/audio.hpp"
#include "namegauge/error.hpp"

namespace namegauge::mel {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameLength = 400;
inline constexpr int kHop = 160;
inline constexpr int kBins = kFrameLength / 2 + 1;  // 201
inline constexpr int kMelChannels = 80;
inline constexpr double kPowerFloor = 1e-10;
inline constexpr double kDynamicRange = 8.0;

/// Slaney mel scale: linear below 1 kHz, logarithmic above.
inline double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return hz < min_log_hz ? hz / f_sp : min_log_mel + std::log(hz / min_log_hz) / logstep;
}

inline double mel_to_hz(double m) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return m < min_log_mel ? m * f_sp : min_log_hz * std::exp(logstep * (m - min_log_mel));
}

/// 80 x 201 triangular filters over 0-8000 Hz with area (Slaney) normalization,
/// row-major.
class Filterbank {
 public:
  Filterbank() : weights_(static_cast<std::size_t>(kMelChannels) * kBins, 0.0) {
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(kSampleRate / 2.0);
    for (int i = 0; i < kMelChannels + 2; ++i) {
      edges_[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelChannels + 1));
    }
    for (int m = 0; m < kMelChannels; ++m) {
      const double lo = edges_[m], mid = edges_[m + 1], hi = edges_[m + 2];
      const double norm = 2.0 / (hi - lo);
      for (int k = 0; k < kBins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / kFrameLength;
        const double rise = (f - lo) / (mid - lo);
        const double fall = (hi - f) / (hi - mid);
        weights_[m * kBins + k] = norm * std::max(0.0, std::min(rise, fall));
      }
    }
  }

  double weight(int channel, int bin) const { return weights_[channel * kBins + bin]; }

  std::span<const double> row(int channel) const {
    return std::span<const double>(weights_).subspan(static_cast<std::size_t>(channel) * kBins,
                                                     kBins);
  }

  /// Band edges in Hz: filter m rises from edge m, peaks at m+1, falls to m+2.
  const std::array<double, kMelChannels + 2>& edges() const { return edges_; }

  static const Filterbank& instance() {
    static const Filterbank bank;
    return bank;
  }

 private:
  std::vector<double> weights_;
  std::array<double, kMelChannels + 2> edges_{};
};

/// Periodic Hann window of length 400.
inline const std::array<double, kFrameLength>& hann_window() {
  static const auto window = [] {
    std::array<double, kFrameLength> w{};
    for (int n = 0; n < kFrameLength; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kFrameLength);
    }
    return w;
  }();
  return window;
}

/// |X_k|^2 for k = 0..200 of a 400-point real DFT (direct evaluation with a
/// shared twiddle table; 400 is not a power of two and frames are few).
inline std::array<double, kBins> power_spectrum(std::span<const double, kFrameLength> frame) {
  static const auto twiddles = [] {
    std::array<std::array<double, 2>, kFrameLength> t{};
    for (int m = 0; m < kFrameLength; ++m) {
      const double a = 2.0 * std::numbers::pi * m / kFrameLength;
      t[m] = {std::cos(a), std::sin(a)};
    }
    return t;
  }();
  std::array<double, kBins> power{};
  for (int k = 0; k < kBins; ++k) {
    double re = 0.0, im = 0.0;
    int idx = 0;
    for (int n = 0; n < kFrameLength; ++n) {
      re += frame[n] * twiddles[idx][0];
      im -= frame[n] * twiddles[idx][1];
      idx += k;
      if (idx >= kFrameLength) idx -= kFrameLength;
    }
    power[k] = re * re + im * im;
  }
  return power;
}

/// 80 x T log-Mel matrix, row-major by mel channel.
struct MelSpectrogram {
  std::vector<double> values;
  std::size_t frames = 0;
  /// Frames whose centre lies inside the unpadded signal.
  std::size_t content_frames = 0;

  double at(int channel, std::size_t frame) const { return values[channel * frames + frame]; }
  double& at(int channel, std::size_t frame) { return values[channel * frames + frame]; }
};

/// Pad/truncate to `pad_to_seconds`, centred STFT (reflect padding, hop 160,
/// 400-sample periodic Hann), 80-channel mel power, then
/// log10(max(p, 1e-10)), floor at max - 8 and (x + 4) / 4.
inline MelSpectrogram log_mel(const AudioBuffer& audio, double pad_to_seconds = 30.0) {
  if (audio.sample_rate != kSampleRate) {
    fail(ErrorKind::kDomain, "log_mel needs 16000 Hz audio, got " +
                                 std::to_string(audio.sample_rate));
  }
  if (!(pad_to_seconds > 0.0)) fail(ErrorKind::kDomain, "pad_to must be positive");
  const auto length = static_cast<std::size_t>(std::llround(pad_to_seconds * kSampleRate));
  const std::size_t frames = length / kHop;
  if (frames == 0) fail(ErrorKind::kDomain, "pad_to shorter than one hop");

  constexpr std::size_t half = kFrameLength / 2;
  std::vector<double> padded(length + 2 * half, 0.0);
  const std::size_t content = std::min(audio.samples.size(), length);
  std::copy_n(audio.samples.begin(), content, padded.begin() + half);
  // Reflect padding (edge sample not repeated) on both ends.
  for (std::size_t i = 1; i <= half; ++i) {
    padded[half - i] = padded[half + std::min(i, length - 1)];
    padded[half + length - 1 + i] = padded[half + length - 1 - std::min(i, length - 1)];
  }

  const auto& window = hann_window();
  const auto& bank = Filterbank::instance();
  MelSpectrogram mel;
  mel.frames = frames;
  mel.content_frames =
      std::min(frames, std::max<std::size_t>(1, (content + kHop - 1) / kHop));
  mel.values.assign(static_cast<std::size_t>(kMelChannels) * frames, 0.0);

  std::array<double, kFrameLength> frame{};
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = padded.data() + t * kHop;
    bool silent = true;
    for (int n = 0; n < kFrameLength; ++n) {
      frame[n] = src[n] * window[n];
      silent = silent && src[n] == 0.0;
    }
    std::array<double, kBins> power{};
    if (!silent) power = power_spectrum(frame);
    for (int m = 0; m < kMelChannels; ++m) {
      double e = 0.0;
      if (!silent) {
        const auto w = bank.row(m);
        for (int k = 0; k < kBins; ++k) e += w[k] * power[k];
      }
      const double p = std::log10(std::max(e, kPowerFloor));
      mel.at(m, t) = p;
      max_log = std::max(max_log, p);
    }
  }
  const double floor = max_log - kDynamicRange;
  for (auto& v : mel.values) v = (std::max(v, floor) + 4.0) / 4.0;
  return mel;
}

struct FeatureVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

/// Per-channel mean then population standard deviation over the first
/// `frames` columns (all frames when 0): a 160-dim vector.
inline FeatureVector pool_features(const MelSpectrogram& mel, std::size_t frames = 0) {
  if (frames == 0) frames = mel.frames;
  if (frames == 0 || frames > mel.frames) {
    fail(ErrorKind::kDimension, "cannot pool a spectrogram with zero frames");
  }
  FeatureVector out;
  out.values.assign(2 * kMelChannels, 0.0);
  for (int m = 0; m < kMelChannels; ++m) {
    double sum = 0.0;
    for (std::size_t t = 0; t < frames; ++t) sum += mel.at(m, t);
    const double mean = sum / static_cast<double>(frames);
    double ss = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      const double d = mel.at(m, t) - mean;
      ss += d * d;
    }
    out.values[m] = mean;
    out.values[kMelChannels + m] = std::sqrt(ss / static_cast<double>(frames));
  }
  return out;
}

}  // namespace namegauge::mel
