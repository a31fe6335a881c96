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
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace tse {

/// splitmix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over the bytes of `s`, folded with `h`. Platform independent.
constexpr uint64_t HashBytes(uint64_t h, std::string_view s) {
  uint64_t x = 0xcbf29ce484222325ULL ^ Mix64(h);
  for (unsigned char c : s) {
    x ^= c;
    x *= 0x100000001b3ULL;
  }
  // Length terminator keeps ("ab","c") distinct from ("a","bc").
  x ^= static_cast<uint64_t>(s.size());
  x *= 0x100000001b3ULL;
  return Mix64(x);
}

/// Stable seed derivation from a base seed and a sequence of string keys.
template <typename... Keys>
constexpr uint64_t DeriveSeed(uint64_t base, const Keys &...keys) {
  uint64_t h = Mix64(base);
  ((h = HashBytes(h, std::string_view(keys))), ...);
  return h;
}

/// Deterministic random source. Only the raw mt19937_64 output (which the
/// standard pins down) is used; every distribution is implemented here so
/// streams are identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t UniformIndex(uint64_t n) {
    // Rejection on the top of the range removes modulo bias.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool Bernoulli(double p) { return Uniform01() < p; }

  /// Standard normal via Box-Muller (one value per call).
  double Normal() {
    double u1;
    do {
      u1 = Uniform01();
    } while (u1 <= 0.0);
    const double u2 = Uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformIndex(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tse
