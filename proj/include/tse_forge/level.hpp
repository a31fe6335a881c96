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

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/error.hpp"

namespace tse {

struct LevelReport {
  double active_level_dbov = 0.0;
  double activity_factor = 0.0;
  double gain_applied = 1.0;
};

/// ITU-T P.56 method B parameters, as used by the sv56 voltmeter.
struct P56Params {
  double time_constant_s = 0.03;
  double hangover_s = 0.2;
  double margin_db = 15.9;
};

/// Active speech level in dBov (0 dBov = full-scale square wave).
///
/// A two-pole envelope q(n) is compared against 15 thresholds 2^-15..2^-1 of
/// full scale. Samples above a threshold, plus a hangover after each
/// excursion, count as active for it. For each threshold j the level
/// A_j = energy / active_count_j is formed; the result is A at the point where
/// A_j - 20 log10(c_j) falls to the margin, interpolated in the dB domain.
inline LevelReport ActiveSpeechLevel(const Waveform &w, P56Params params = {}) {
  constexpr int kThresholds = 15;
  const double fs = w.sample_rate;
  const double g = std::exp(-1.0 / (fs * params.time_constant_s));
  const long hangover = static_cast<long>(std::floor(params.hangover_s * fs + 0.5));

  std::array<double, kThresholds> thresh{};
  for (int j = 0; j < kThresholds; ++j) thresh[j] = std::ldexp(1.0, j - kThresholds);

  std::array<long, kThresholds> active{};
  std::array<long, kThresholds> hang{};
  hang.fill(hangover);

  double energy = 0.0, p = 0.0, q = 0.0;
  for (double x : w.samples) {
    energy += x * x;
    p = g * p + (1.0 - g) * std::abs(x);
    q = g * q + (1.0 - g) * p;
    for (int j = 0; j < kThresholds; ++j) {
      if (q >= thresh[j]) {
        ++active[j];
        hang[j] = 0;
      } else if (hang[j] < hangover) {
        ++active[j];
        ++hang[j];
      }
    }
  }
  if (energy <= 0.0) throw Error(ErrorCode::kSilentInput, "all-zero waveform");

  const double n = static_cast<double>(w.size());
  LevelReport report;
  auto finish = [&](double level_db) {
    report.active_level_dbov = level_db;
    report.activity_factor =
        std::min(1.0, energy / (n * std::pow(10.0, level_db / 10.0)));
    return report;
  };

  if (active[0] == 0) {
    // Envelope never reached the lowest threshold: fall back to plain RMS.
    return finish(10.0 * std::log10(energy / n));
  }

  auto level_at = [&](int j) { return 10.0 * std::log10(energy / active[j]); };
  auto excess_at = [&](int j) { return level_at(j) - 20.0 * std::log10(thresh[j]); };

  double prev_level = level_at(0);
  double prev_excess = excess_at(0);
  if (prev_excess <= params.margin_db) return finish(prev_level);

  for (int j = 1; j < kThresholds; ++j) {
    if (active[j] == 0) return finish(prev_level);
    const double level = level_at(j);
    const double excess = excess_at(j);
    if (excess <= params.margin_db) {
      const double frac = (prev_excess - params.margin_db) / (prev_excess - excess);
      return finish(prev_level + frac * (level - prev_level));
    }
    prev_level = level;
    prev_excess = excess;
  }
  return finish(prev_level);
}

/// Scales `w` by a single gain so its active level becomes `target_dbov`.
inline std::pair<Waveform, LevelReport> NormalizeTo(const Waveform &w,
                                                    double target_dbov = -26.0,
                                                    P56Params params = {}) {
  LevelReport report = ActiveSpeechLevel(w, params);
  report.gain_applied = std::pow(10.0, (target_dbov - report.active_level_dbov) / 20.0);
  Waveform out = w;
  for (double &x : out.samples) x *= report.gain_applied;
  return {std::move(out), report};
}

}  // namespace tse
