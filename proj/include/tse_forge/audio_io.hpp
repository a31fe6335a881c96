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
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "tse_forge/error.hpp"
#include "tse_forge/rng.hpp"

namespace tse {

inline constexpr int kSampleRate = 16000;

/// Mono 16 kHz waveform with samples nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  Waveform() = default;
  explicit Waveform(std::vector<double> s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  bool operator==(const Waveform &) const = default;
};

struct ClipReport {
  size_t clipped = 0;
};

namespace detail {

inline uint32_t ReadLe32(const unsigned char *p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}
inline uint16_t ReadLe16(const unsigned char *p) {
  return uint16_t(p[0] | p[1] << 8);
}
inline void PutLe32(std::vector<unsigned char> &out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
inline void PutLe16(std::vector<unsigned char> &out, uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back(v >> 8);
}

inline std::vector<unsigned char> ReadFileBytes(const std::filesystem::path &path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorCode::kNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

inline void WriteFileBytes(const std::filesystem::path &path,
                           const std::vector<unsigned char> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace detail

/// Round-half-away-from-zero quantization to 16-bit PCM. Returns true when
/// the value had to be clamped.
inline bool QuantizeSample(double x, int16_t *out) {
  const double scaled = std::round(x * 32768.0);
  if (scaled > 32767.0) {
    *out = 32767;
    return true;
  }
  if (scaled < -32768.0) {
    *out = -32768;
    return true;
  }
  *out = static_cast<int16_t>(scaled);
  return false;
}

/// Parses an in-memory RIFF/WAVE image (16-bit PCM, mono, 16 kHz).
inline Waveform DecodeWav(const std::vector<unsigned char> &bytes,
                          const std::string &name = "<memory>") {
  auto unsupported = [&](const std::string &why) {
    return Error(ErrorCode::kUnsupportedFormat, name + ": " + why);
  };
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE")
    throw unsupported("not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + pos, bytes.begin() + pos + 4);
    const uint32_t size = detail::ReadLe32(&bytes[pos + 4]);
    const size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size())
        throw unsupported("malformed fmt chunk");
      const uint16_t tag = detail::ReadLe16(&bytes[body]);
      channels = detail::ReadLe16(&bytes[body + 2]);
      rate = detail::ReadLe32(&bytes[body + 4]);
      bits = detail::ReadLe16(&bytes[body + 14]);
      if (tag != 1 && tag != 0xFFFE)
        throw unsupported("format tag " + std::to_string(tag) + " (need PCM)");
      if (channels != 1)
        throw unsupported("channels=" + std::to_string(channels) + " (need 1)");
      if (rate != kSampleRate)
        throw unsupported("sample rate=" + std::to_string(rate) + " (need 16000)");
      if (bits != 16)
        throw unsupported("bits per sample=" + std::to_string(bits) + " (need 16)");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw unsupported("data chunk before fmt chunk");
      const size_t avail = std::min<size_t>(size, bytes.size() - body);
      const size_t n = avail / 2;
      std::vector<double> samples(n);
      for (size_t i = 0; i < n; ++i) {
        const auto v = static_cast<int16_t>(detail::ReadLe16(&bytes[body + 2 * i]));
        samples[i] = v / 32768.0;
      }
      return Waveform(std::move(samples));
    }
    pos = body + size + (size & 1);
  }
  throw unsupported(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

inline Waveform ReadWav(const std::filesystem::path &path) {
  return DecodeWav(detail::ReadFileBytes(path), path.string());
}

/// Serializes to a canonical 44-byte-header PCM image.
inline std::vector<unsigned char> EncodeWav(const Waveform &w, ClipReport *report) {
  if (w.sample_rate != kSampleRate)
    throw Error(ErrorCode::kUnsupportedFormat,
                "sample rate=" + std::to_string(w.sample_rate));
  const uint32_t data_bytes = static_cast<uint32_t>(w.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::PutLe32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::PutLe32(out, 16);
  detail::PutLe16(out, 1);
  detail::PutLe16(out, 1);
  detail::PutLe32(out, kSampleRate);
  detail::PutLe32(out, kSampleRate * 2);
  detail::PutLe16(out, 2);
  detail::PutLe16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::PutLe32(out, data_bytes);
  ClipReport clips;
  for (double x : w.samples) {
    if (!std::isfinite(x))
      throw Error(ErrorCode::kInvalidArgument, "non-finite sample");
    int16_t q;
    if (QuantizeSample(x, &q)) ++clips.clipped;
    detail::PutLe16(out, static_cast<uint16_t>(q));
  }
  if (report) *report = clips;
  return out;
}

inline ClipReport WriteWav(const std::filesystem::path &path, const Waveform &w) {
  ClipReport report;
  const auto bytes = EncodeWav(w, &report);
  if (path.has_parent_path() && !std::filesystem::is_directory(path.parent_path()))
    throw Error(ErrorCode::kIoError, "no such directory: " + path.parent_path().string());
  detail::WriteFileBytes(path, bytes);
  return report;
}

/// Value of `w` after a write/read cycle.
inline Waveform Quantized(const Waveform &w) {
  Waveform q = w;
  for (double &x : q.samples) {
    int16_t v;
    QuantizeSample(x, &v);
    x = v / 32768.0;
  }
  return q;
}

struct Segmentation {
  std::vector<Waveform> segments;
  size_t offset = 0;            // samples skipped at the start
  size_t trailing_padding = 0;  // zeros appended to the last segment
};

inline size_t SecondsToSamples(double seconds) {
  return static_cast<size_t>(std::llround(seconds * kSampleRate));
}

/// Cuts `w` into fixed-length segments starting at `offset`; the last
/// segment is zero-padded at the end.
inline Segmentation SegmentAt(const Waveform &w, double seconds, size_t offset) {
  if (w.empty()) throw Error(ErrorCode::kInvalidArgument, "empty waveform");
  if (!(seconds > 0)) throw Error(ErrorCode::kInvalidArgument, "segment length must be > 0");
  const size_t seg = SecondsToSamples(seconds);
  if (seg == 0) throw Error(ErrorCode::kInvalidArgument, "segment shorter than one sample");
  if (offset >= w.size()) throw Error(ErrorCode::kInvalidArgument, "offset past end");

  Segmentation out;
  out.offset = offset;
  const size_t usable = w.size() - offset;
  const size_t count = (usable + seg - 1) / seg;
  for (size_t i = 0; i < count; ++i) {
    const size_t begin = offset + i * seg;
    const size_t end = std::min(begin + seg, w.size());
    std::vector<double> s(seg, 0.0);
    std::copy(w.samples.begin() + begin, w.samples.begin() + end, s.begin());
    out.segments.emplace_back(std::move(s));
  }
  out.trailing_padding = count * seg - usable;
  return out;
}

/// Random-grid segmentation: the grid start is uniform in [0, L mod S).
/// Inputs no longer than one segment keep offset 0.
inline Segmentation Segment(const Waveform &w, double seconds, SeededRng &rng) {
  if (w.empty()) throw Error(ErrorCode::kInvalidArgument, "empty waveform");
  const size_t seg = SecondsToSamples(seconds);
  const size_t remainder = seg == 0 || w.size() <= seg ? 0 : w.size() % seg;
  const size_t offset = remainder > 0 ? rng.UniformIndex(remainder) : 0;
  return SegmentAt(w, seconds, offset);
}

struct ReferenceLimits {
  double min_seconds = 10.0;
  double max_seconds = 15.0;
};

/// Reference assembly over `count` utterances produced on demand by `load`.
/// Order is an rng shuffle; concatenation stops once min_seconds is reached
/// and the result is truncated to max_seconds.
template <typename Loader>
Waveform BuildReferenceFrom(size_t count, Loader &&load, SeededRng &rng,
                            ReferenceLimits limits = {}) {
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "no reference utterances");
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), size_t{0});
  rng.Shuffle(std::span<size_t>(order));

  const size_t min_len = SecondsToSamples(limits.min_seconds);
  const size_t max_len = SecondsToSamples(limits.max_seconds);
  Waveform ref;
  for (size_t idx : order) {
    if (ref.size() >= min_len) break;
    const Waveform w = load(idx);
    ref.samples.insert(ref.samples.end(), w.samples.begin(), w.samples.end());
  }
  if (ref.size() > max_len) ref.samples.resize(max_len);
  return ref;
}

inline Waveform BuildReference(const std::vector<Waveform> &utterances,
                               SeededRng &rng, ReferenceLimits limits = {}) {
  if (utterances.empty())
    throw Error(ErrorCode::kInvalidArgument, "no reference utterances");
  return BuildReferenceFrom(
      utterances.size(), [&](size_t i) -> const Waveform & { return utterances[i]; },
      rng, limits);
}

}  // namespace tse
