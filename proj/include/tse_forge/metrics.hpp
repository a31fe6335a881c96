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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/manifest.hpp"
#include "tse_forge/parallel.hpp"

namespace tse {

inline constexpr double kMetricEpsilon = 1e-8;
inline constexpr double kSdrCapDb = 60.0;

namespace detail {

/// 10 log10(sum s^2 / (sum (s - s_hat)^2 + eps)).
inline double SignalToErrorDb(std::span<const double> s, std::span<const double> s_hat) {
  if (s.size() != s_hat.size())
    throw Error(ErrorCode::kLengthMismatch, std::to_string(s.size()) + " vs " + std::to_string(s_hat.size()));
  double signal = 0.0, error = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    signal += s[i] * s[i];
    const double d = s[i] - s_hat[i];
    error += d * d;
  }
  if (!(signal > 0.0)) throw Error(ErrorCode::kZeroTarget, "target is all zeros");
  return 10.0 * std::log10(signal / (error + kMetricEpsilon));
}

}  // namespace detail

/// Negative-SNR training loss in dB (lower is better).
inline double SnrLoss(const Waveform &s, const Waveform &s_hat) {
  return -detail::SignalToErrorDb(s.samples, s_hat.samples);
}

/// Plain SDR in dB, capped at +60.
inline double Sdr(const Waveform &s, const Waveform &s_hat) {
  return std::min(kSdrCapDb, detail::SignalToErrorDb(s.samples, s_hat.samples));
}

/// SDR improvement of the estimate over the unprocessed mixture.
inline double Isdr(const Waveform &s, const Waveform &s_hat, const Waveform &m) {
  return Sdr(s, s_hat) - Sdr(s, m);
}

struct EvalItem {
  std::string id;
  double sdr_db = 0.0;
  double isdr_db = 0.0;
  double snr_loss_db = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
};

inline Aggregate Summarize(std::vector<double> values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  a.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return a;
}

/// Per-item rows plus aggregates. count + missing.size() == manifest size.
struct EvalReport {
  std::vector<EvalItem> items;
  std::vector<std::string> missing;
  Aggregate sdr, isdr, snr_loss;
  size_t count = 0;
  double cap_db = kSdrCapDb;
};

inline void FinalizeAggregates(EvalReport &report) {
  std::vector<double> sdr, isdr, loss;
  for (const auto &it : report.items) {
    sdr.push_back(it.sdr_db);
    isdr.push_back(it.isdr_db);
    loss.push_back(it.snr_loss_db);
  }
  report.sdr = Summarize(std::move(sdr));
  report.isdr = Summarize(std::move(isdr));
  report.snr_loss = Summarize(std::move(loss));
  report.count = report.items.size();
}

/// Scores estimates_dir/<id>.wav against each entry's target and mixture.
/// Missing estimates are listed; with `strict` the first one is fatal.
inline EvalReport EvaluateManifest(const Manifest &manifest, const std::filesystem::path &manifest_dir,
                                   const std::filesystem::path &estimates_dir, bool strict = false,
                                   size_t workers = 1) {
  EvalReport report;
  std::vector<char> present(manifest.size(), 0);
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto path = estimates_dir / (manifest[i].id + ".wav");
    if (std::filesystem::is_regular_file(path)) {
      present[i] = 1;
    } else {
      if (strict) throw Error(ErrorCode::kMissingEstimate, path.string());
      report.missing.push_back(manifest[i].id);
    }
  }
  std::vector<EvalItem> rows(manifest.size());
  ParallelFor(manifest.size(), workers, [&](size_t i) {
    if (!present[i]) return;
    const auto &e = manifest[i];
    try {
      const Waveform s = ReadWav(manifest_dir / e.target_path);
      const Waveform m = ReadWav(manifest_dir / e.mixture_path);
      const Waveform est = ReadWav(estimates_dir / (e.id + ".wav"));
      rows[i] = {e.id, Sdr(s, est), Isdr(s, est, m), SnrLoss(s, est)};
    } catch (const Error &err) {
      RethrowWithContext(err, "item " + e.id);
    }
  });
  for (size_t i = 0; i < manifest.size(); ++i)
    if (present[i]) report.items.push_back(std::move(rows[i]));
  FinalizeAggregates(report);
  return report;
}

}  // namespace tse
