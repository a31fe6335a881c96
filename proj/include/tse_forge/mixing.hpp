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
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/rng.hpp"

namespace tse {

struct MixSpec {
  double snr_db = 0.0;
  double alpha = 1.0;
  std::optional<double> noise_snr_db;
  bool noise_applied = false;
};

inline double MeanPower(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double MeanPower(const Waveform &w) { return MeanPower(std::span<const double>(w.samples)); }

/// SNR in dB of `signal` against `noise`, both as mean powers.
inline double SnrDb(double signal_power, double noise_power) {
  return 10.0 * std::log10(signal_power / noise_power);
}

/// Gain that puts `interference` at `snr_db` below `target`:
/// alpha = sqrt(P_s / (P_i * 10^(snr/10))), powers over the common extent.
inline double GainForSnr(const Waveform &target, const Waveform &interference,
                         double snr_db) {
  const size_t n = std::min(target.size(), interference.size());
  const double ps = MeanPower(std::span<const double>(target.samples.data(), n));
  const double pi = MeanPower(std::span<const double>(interference.samples.data(), n));
  if (!(ps > 0.0)) throw Error(ErrorCode::kZeroEnergy, "target is silent");
  if (!(pi > 0.0)) throw Error(ErrorCode::kZeroEnergy, "interference is silent");
  return std::sqrt(ps / (pi * std::pow(10.0, snr_db / 10.0)));
}

/// m[i] = s[i] + alpha * s'[i].
inline std::pair<Waveform, MixSpec> Mix(const Waveform &target,
                                        const Waveform &interference, double snr_db) {
  if (target.size() != interference.size())
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(target.size()) + " vs " + std::to_string(interference.size()));
  MixSpec spec;
  spec.snr_db = snr_db;
  spec.alpha = GainForSnr(target, interference, snr_db);
  Waveform m = target;
  for (size_t i = 0; i < m.size(); ++i) m.samples[i] += spec.alpha * interference.samples[i];
  return {std::move(m), spec};
}

struct SnrRange {
  double lo = -5.0;
  double hi = 5.0;
  double Sample(SeededRng &rng) const { return rng.Uniform(lo, hi); }
};

struct NoiseConfig {
  double probability = 0.5;
  SnrRange snr{-5.0, 10.0};
};

/// Outcome of one noise-augmentation draw.
struct NoiseDelta {
  bool applied = false;
  size_t clip_index = 0;
  size_t window_offset = 0;
  double snr_db = 0.0;
  double gain = 0.0;
};

/// With probability cfg.probability adds a random window of a random pool
/// clip to `m` at an SNR drawn from cfg.snr. The window has m's length.
inline std::pair<Waveform, NoiseDelta> AugmentNoise(const Waveform &m,
                                                    std::span<const Waveform> pool,
                                                    SeededRng &rng, NoiseConfig cfg = {}) {
  if (pool.empty()) throw Error(ErrorCode::kEmptyPool, "noise pool is empty");
  NoiseDelta delta;
  if (!rng.Bernoulli(cfg.probability)) return {m, delta};

  delta.applied = true;
  delta.clip_index = static_cast<size_t>(rng.UniformIndex(pool.size()));
  const Waveform &clip = pool[delta.clip_index];
  if (clip.size() < m.size())
    throw Error(ErrorCode::kNoiseTooShort,
                "noise clip " + std::to_string(delta.clip_index) + " has " +
                    std::to_string(clip.size()) + " samples, need " + std::to_string(m.size()));
  delta.window_offset = static_cast<size_t>(rng.UniformIndex(clip.size() - m.size() + 1));
  delta.snr_db = cfg.snr.Sample(rng);

  const std::span<const double> window(clip.samples.data() + delta.window_offset, m.size());
  const double pm = MeanPower(m);
  const double pn = MeanPower(window);
  if (!(pm > 0.0)) throw Error(ErrorCode::kZeroEnergy, "mixture is silent");
  if (!(pn > 0.0)) throw Error(ErrorCode::kZeroEnergy, "noise window is silent");
  delta.gain = std::sqrt(pm / (pn * std::pow(10.0, delta.snr_db / 10.0)));

  Waveform out = m;
  for (size_t i = 0; i < out.size(); ++i) out.samples[i] += delta.gain * window[i];
  return {std::move(out), delta};
}

}  // namespace tse
