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

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support/desk_corpus.hpp"
#include "tse_forge/level.hpp"

namespace tse {
namespace {

Waveform Sine(double amplitude, double seconds = 3.0, double freq = 440.0) {
  std::vector<double> x(SecondsToSamples(seconds));
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * double(i) / kSampleRate);
  return Waveform(std::move(x));
}

double RmsDb(const Waveform &w) {
  double acc = 0.0;
  for (double x : w.samples) acc += x * x;
  return 10.0 * std::log10(acc / double(w.size()));
}

TEST(LevelTest, FullScaleSine) {
  const auto r = ActiveSpeechLevel(Sine(1.0));
  EXPECT_NEAR(r.active_level_dbov, 20.0 * std::log10(1.0 / std::sqrt(2.0)), 0.2);
  EXPECT_GT(r.activity_factor, 0.95);
}

TEST(LevelTest, QuietSine) {
  const auto r = ActiveSpeechLevel(Sine(0.1));
  EXPECT_NEAR(r.active_level_dbov, 20.0 * std::log10(0.1 / std::sqrt(2.0)), 0.2);
}

TEST(LevelTest, SilentInputRejected) {
  try {
    ActiveSpeechLevel(Waveform(std::vector<double>(16000, 0.0)));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kSilentInput);
  }
  EXPECT_THROW(NormalizeTo(Waveform(std::vector<double>(100, 0.0))), Error);
}

TEST(LevelTest, SilenceRaisesActiveLevelAboveRms) {
  Waveform w = Sine(0.3, 2.0);
  w.samples.resize(w.size() + SecondsToSamples(6.0), 0.0);
  const auto r = ActiveSpeechLevel(w);
  EXPECT_GT(r.active_level_dbov, RmsDb(w) + 3.0);
  EXPECT_LT(r.activity_factor, 0.5);
}

TEST(LevelTest, NormalizeFullScaleSine) {
  auto [out, r] = NormalizeTo(Sine(1.0), -26.0);
  EXPECT_NEAR(r.gain_applied, 0.0709, 0.0709 * 0.025);
  double peak = 0.0;
  for (double x : out.samples) peak = std::max(peak, std::abs(x));
  EXPECT_NEAR(peak, 0.0709, 0.0709 * 0.025);
  EXPECT_NEAR(ActiveSpeechLevel(out).active_level_dbov, -26.0, 0.5);
}

TEST(LevelTest, NormalizeIsIdempotent) {
  SeededRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Waveform w = testing::SpeechLikeTone(rng.Uniform(2.0, 6.0), rng.Uniform(90, 260), rng.Uniform(0.05, 0.8), rng);
    auto [once, r1] = NormalizeTo(w, -26.0);
    auto [twice, r2] = NormalizeTo(once, -26.0);
    EXPECT_NEAR(ActiveSpeechLevel(once).active_level_dbov, -26.0, 0.5);
    EXPECT_GE(r2.gain_applied, std::pow(10.0, -0.025));
    EXPECT_LE(r2.gain_applied, std::pow(10.0, 0.025));
  }
}

TEST(LevelTest, ScaleEquivariance) {
  SeededRng rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    const Waveform w = testing::SpeechLikeTone(4.0, rng.Uniform(90, 260), 0.9, rng);
    const double base = ActiveSpeechLevel(w).active_level_dbov;
    for (double c : {0.01, 0.03, 0.1, 0.3, 0.7, 1.0}) {
      Waveform scaled = w;
      for (double &x : scaled.samples) x *= c;
      EXPECT_NEAR(ActiveSpeechLevel(scaled).active_level_dbov, base + 20.0 * std::log10(c), 0.1)
          << "trial " << trial << " c=" << c;
    }
  }
}

TEST(LevelTest, ReportInvariants) {
  SeededRng rng(2);
  const Waveform w = testing::SpeechLikeTone(3.0, 150, 0.4, rng);
  const auto r = ActiveSpeechLevel(w);
  EXPECT_GE(r.activity_factor, 0.0);
  EXPECT_LE(r.activity_factor, 1.0);
  EXPECT_GT(NormalizeTo(w).second.gain_applied, 0.0);
}

}  // namespace
}  // namespace tse
