// Copyright 2026  The tse-forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/features.hpp"

namespace tse {

// 32 ms window, 8 ms hop, 512-point transform at 16 kHz.
inline constexpr size_t kFftSize = 512;
inline constexpr size_t kHopSize = 128;
inline constexpr size_t kNumBins = kFftSize / 2 + 1;

using Complex = std::complex<double>;

/// frames x 257 one-sided spectrum, row-major.
struct ComplexSpectrogram {
  size_t frames = 0;
  std::vector<Complex> data;

  ComplexSpectrogram() = default;
  explicit ComplexSpectrogram(size_t f) : frames(f), data(f * kNumBins) {}

  Complex &at(size_t frame, size_t bin) { return data[frame * kNumBins + bin]; }
  const Complex &at(size_t frame, size_t bin) const { return data[frame * kNumBins + bin]; }
  static constexpr size_t bins() { return kNumBins; }
};

using Mask = ComplexSpectrogram;

/// Periodic Hann window; with a quarter-length hop its square sums to 1.5.
inline const std::vector<double> &HannWindow() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFftSize);
    for (size_t i = 0; i < kFftSize; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(kFftSize));
    return w;
  }();
  return window;
}

inline size_t NumFrames(size_t length) { return (length + kHopSize - 1) / kHopSize; }

/// Centered STFT with reflect padding of half a window on both sides.
inline ComplexSpectrogram Stft(const Waveform &w) {
  const size_t len = w.size();
  if (len < kFftSize)
    throw Error(ErrorCode::kTooShort, std::to_string(len) + " samples, need >= 512");
  const size_t pad = kFftSize / 2;
  std::vector<double> padded(len + 2 * pad);
  for (size_t i = 0; i < padded.size(); ++i) {
    const auto idx = static_cast<long>(i) - static_cast<long>(pad);
    long src = idx < 0 ? -idx : idx;
    if (src >= static_cast<long>(len)) src = 2 * (static_cast<long>(len) - 1) - src;
    padded[i] = w.samples[static_cast<size_t>(src)];
  }

  const auto &window = HannWindow();
  ComplexSpectrogram spec(NumFrames(len));
  Eigen::FFT<double> fft;
  std::vector<double> frame(kFftSize);
  std::vector<Complex> bins;
  for (size_t t = 0; t < spec.frames; ++t) {
    for (size_t i = 0; i < kFftSize; ++i) frame[i] = padded[t * kHopSize + i] * window[i];
    fft.fwd(bins, frame);
    for (size_t k = 0; k < kNumBins; ++k) spec.at(t, k) = bins[k];
  }
  return spec;
}

/// Inverse STFT by windowed overlap-add, normalized by the summed squared
/// window so that Istft(Stft(w), w.size()) reproduces w.
inline Waveform Istft(const ComplexSpectrogram &spec, size_t length) {
  if (spec.data.size() != spec.frames * kNumBins)
    throw Error(ErrorCode::kDimMismatch, "spectrogram storage does not match frame count");
  if (length == 0 || NumFrames(length) != spec.frames)
    throw Error(ErrorCode::kDimMismatch, std::to_string(spec.frames) +
                                             " frames cannot produce " + std::to_string(length) +
                                             " samples");
  const auto &window = HannWindow();
  const size_t pad = kFftSize / 2;
  std::vector<double> acc((spec.frames - 1) * kHopSize + kFftSize, 0.0);
  std::vector<double> norm(acc.size(), 0.0);

  Eigen::FFT<double> fft;
  std::vector<Complex> full(kFftSize);
  std::vector<Complex> frame;
  for (size_t t = 0; t < spec.frames; ++t) {
    full[0] = Complex(spec.at(t, 0).real(), 0.0);
    full[kFftSize / 2] = Complex(spec.at(t, kFftSize / 2).real(), 0.0);
    for (size_t k = 1; k < kFftSize / 2; ++k) {
      full[k] = spec.at(t, k);
      full[kFftSize - k] = std::conj(spec.at(t, k));
    }
    fft.inv(frame, full);
    for (size_t i = 0; i < kFftSize; ++i) {
      acc[t * kHopSize + i] += frame[i].real() * window[i];
      norm[t * kHopSize + i] += window[i] * window[i];
    }
  }

  Waveform out(std::vector<double>(length, 0.0));
  for (size_t n = 0; n < length; ++n) {
    const double wsum = norm[n + pad];
    out.samples[n] = wsum > 1e-10 ? acc[n + pad] / wsum : 0.0;
  }
  return out;
}

/// Target / mixture per bin, magnitude limited to `clamp`. Bins where the
/// mixture is exactly zero get 0 (silent target) or a clamp-magnitude mask
/// with the target's phase.
inline Mask IdealCrm(const ComplexSpectrogram &target, const ComplexSpectrogram &mix,
                     double clamp = 10.0) {
  if (target.frames != mix.frames || target.data.size() != mix.data.size())
    throw Error(ErrorCode::kDimMismatch, "target and mixture spectrograms differ in shape");
  if (!(clamp > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clamp must be > 0");
  Mask mask(mix.frames);
  for (size_t i = 0; i < mix.data.size(); ++i) {
    const Complex s = target.data[i], m = mix.data[i];
    const double den = m.real() * m.real() + m.imag() * m.imag();
    Complex ratio;
    if (den == 0.0) {
      const double mag = std::abs(s);
      ratio = mag == 0.0 ? Complex(0.0, 0.0) : s * (clamp / mag);
    } else {
      ratio = Complex((s.real() * m.real() + s.imag() * m.imag()) / den,
                      (s.imag() * m.real() - s.real() * m.imag()) / den);
      const double mag = std::abs(ratio);
      if (mag > clamp) ratio *= clamp / mag;
    }
    mask.data[i] = ratio;
  }
  return mask;
}

inline ComplexSpectrogram ApplyCrm(const ComplexSpectrogram &mix, const Mask &mask) {
  if (mix.frames != mask.frames || mix.data.size() != mask.data.size())
    throw Error(ErrorCode::kDimMismatch, "mask and mixture spectrograms differ in shape");
  ComplexSpectrogram out(mix.frames);
  for (size_t i = 0; i < mix.data.size(); ++i) out.data[i] = mix.data[i] * mask.data[i];
  return out;
}

/// Model-facing layout: F x 512, real parts of bins 1..256 then imaginary
/// parts of bins 1..256 (DC dropped).
inline FeatureMatrix ExportSpectrogram(const ComplexSpectrogram &spec) {
  constexpr uint32_t kHalf = kFftSize / 2;
  FeatureMatrix m(static_cast<uint32_t>(spec.frames), 2 * kHalf);
  for (size_t t = 0; t < spec.frames; ++t) {
    for (uint32_t k = 0; k < kHalf; ++k) {
      m.at(t, k) = spec.at(t, k + 1).real();
      m.at(t, kHalf + k) = spec.at(t, k + 1).imag();
    }
  }
  return m;
}

}  // namespace tse
