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
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/rng.hpp"

namespace tse {

/// Row-major T x D frame-level features (or a 1 x D embedding).
struct FeatureMatrix {
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(uint32_t r, uint32_t c) : rows(r), cols(c), data(size_t(r) * c, 0.0) {}
  FeatureMatrix(uint32_t r, uint32_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != size_t(r) * c)
      throw Error(ErrorCode::kDimMismatch, "data size does not match rows*cols");
  }

  std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(size_t i) { return {data.data() + i * cols, cols}; }
  double &at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }

  bool operator==(const FeatureMatrix &) const = default;
};

// FMX1 layout: "FMX1", u32 version=1, u32 rows, u32 cols, then rows*cols
// float32 values, all little-endian.
inline constexpr uint32_t kFmxVersion = 1;
inline constexpr size_t kFmxHeaderBytes = 16;
inline constexpr uint64_t kFmxMaxElements = uint64_t{1} << 31;

inline std::vector<unsigned char> EncodeFmx(const FeatureMatrix &m) {
  if (m.rows == 0 || m.cols == 0)
    throw Error(ErrorCode::kInvalidArgument, "matrix must be at least 1x1");
  if (uint64_t(m.rows) * m.cols > kFmxMaxElements)
    throw Error(ErrorCode::kDimensionOverflow,
                std::to_string(m.rows) + "x" + std::to_string(m.cols));
  if (m.data.size() != size_t(m.rows) * m.cols)
    throw Error(ErrorCode::kDimMismatch, "data size does not match rows*cols");
  std::vector<unsigned char> out{'F', 'M', 'X', '1'};
  out.reserve(kFmxHeaderBytes + 4 * m.data.size());
  detail::PutLe32(out, kFmxVersion);
  detail::PutLe32(out, m.rows);
  detail::PutLe32(out, m.cols);
  for (double v : m.data) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw Error(ErrorCode::kInvalidArgument, "non-finite value");
    detail::PutLe32(out, std::bit_cast<uint32_t>(f));
  }
  return out;
}

/// Parses and validates an FMX1 image.
inline FeatureMatrix DecodeFmx(const std::vector<unsigned char> &bytes,
                               const std::string &name = "<memory>") {
  if (bytes.size() < kFmxHeaderBytes)
    throw Error(ErrorCode::kTruncatedFile, name + ": header needs 16 bytes");
  if (std::string(bytes.begin(), bytes.begin() + 4) != "FMX1")
    throw Error(ErrorCode::kBadMagic, name);
  const uint32_t version = detail::ReadLe32(&bytes[4]);
  if (version != kFmxVersion)
    throw Error(ErrorCode::kUnsupportedFormat, name + ": version " + std::to_string(version));
  const uint32_t rows = detail::ReadLe32(&bytes[8]);
  const uint32_t cols = detail::ReadLe32(&bytes[12]);
  if (rows == 0 || cols == 0)
    throw Error(ErrorCode::kInvalidArgument, name + ": zero dimension");
  const uint64_t count = uint64_t(rows) * cols;
  if (count > kFmxMaxElements)
    throw Error(ErrorCode::kDimensionOverflow,
                name + ": " + std::to_string(rows) + "x" + std::to_string(cols));
  const uint64_t need = kFmxHeaderBytes + 4 * count;
  if (bytes.size() < need)
    throw Error(ErrorCode::kTruncatedFile, name + ": expected " + std::to_string(need) +
                                               " bytes, found " + std::to_string(bytes.size()));
  if (bytes.size() > need)
    throw Error(ErrorCode::kUnsupportedFormat, name + ": trailing bytes");
  FeatureMatrix m(rows, cols);
  for (uint64_t i = 0; i < count; ++i) {
    const float f = std::bit_cast<float>(detail::ReadLe32(&bytes[kFmxHeaderBytes + 4 * i]));
    if (!std::isfinite(f)) throw Error(ErrorCode::kInvalidArgument, name + ": non-finite value");
    m.data[i] = f;
  }
  return m;
}

inline void WriteFmx(const std::filesystem::path &path, const FeatureMatrix &m) {
  detail::WriteFileBytes(path, EncodeFmx(m));
}

inline FeatureMatrix ReadFmx(const std::filesystem::path &path) {
  return DecodeFmx(detail::ReadFileBytes(path), path.string());
}

inline double Norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::kDimMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  const double na = Norm(a), nb = Norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

/// Cosine similarity of two 1 x D embeddings.
inline double CosineSimilarity(const FeatureMatrix &a, const FeatureMatrix &b) {
  if (a.rows != 1 || b.rows != 1)
    throw Error(ErrorCode::kDimMismatch, "embeddings must be 1 x D");
  return CosineSimilarity(a.row(0), b.row(0));
}

/// For each query frame, the mean of the k pool frames nearest in cosine
/// distance. Ties go to the lower pool index.
inline FeatureMatrix KnnSelect(const FeatureMatrix &query, const FeatureMatrix &pool, size_t k) {
  if (query.cols != pool.cols)
    throw Error(ErrorCode::kDimMismatch,
                "query D=" + std::to_string(query.cols) + ", pool D=" + std::to_string(pool.cols));
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (pool.rows < k)
    throw Error(ErrorCode::kPoolTooSmall,
                "pool has " + std::to_string(pool.rows) + " frames, k=" + std::to_string(k));

  std::vector<double> pool_norms(pool.rows);
  for (uint32_t r = 0; r < pool.rows; ++r) {
    pool_norms[r] = Norm(pool.row(r));
    if (pool_norms[r] == 0.0)
      throw Error(ErrorCode::kZeroVector, "pool frame " + std::to_string(r));
  }

  FeatureMatrix out(query.rows, query.cols);
  using Candidate = std::pair<double, uint32_t>;  // (distance, index); max-heap top = worst
  for (uint32_t t = 0; t < query.rows; ++t) {
    const auto q = query.row(t);
    const double qn = Norm(q);
    if (qn == 0.0) throw Error(ErrorCode::kZeroVector, "query frame " + std::to_string(t));

    std::priority_queue<Candidate> best;
    for (uint32_t r = 0; r < pool.rows; ++r) {
      const auto cand = pool.row(r);
      const double dot = std::inner_product(q.begin(), q.end(), cand.begin(), 0.0);
      const Candidate c{1.0 - dot / (qn * pool_norms[r]), r};
      if (best.size() < k) {
        best.push(c);
      } else if (c < best.top()) {
        best.pop();
        best.push(c);
      }
    }
    auto dst = out.row(t);
    while (!best.empty()) {
      const auto src = pool.row(best.top().second);
      for (size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
      best.pop();
    }
    for (double &v : dst) v /= static_cast<double>(k);
  }
  return out;
}

struct SaltConfig {
  size_t k = 4;       // neighbours per frame
  double p = 0.5;     // weight kept on the source representation
  size_t n = 4;       // reference speakers mixed in
};

inline void Validate(const SaltConfig &cfg) {
  if (cfg.k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "p must be in [0,1]");
  if (cfg.n < 1) throw Error(ErrorCode::kInvalidArgument, "N must be >= 1");
}

/// N normal draws normalized to sum to one; redrawn until every weight is
/// positive and the raw sum exceeds 1e-3.
inline std::vector<double> SampleSaltWeights(size_t n, SeededRng &rng) {
  std::vector<double> w(n);
  for (;;) {
    double sum = 0.0;
    bool positive = true;
    for (double &x : w) {
      x = rng.Normal();
      positive = positive && x > 0.0;
      sum += x;
    }
    if (positive && sum > 1e-3) {
      for (double &x : w) x /= sum;
      return w;
    }
  }
}

/// Picks `n` distinct indices out of `available`, in draw order.
inline std::vector<size_t> SelectReferencePools(size_t available, size_t n, SeededRng &rng) {
  if (n > available)
    throw Error(ErrorCode::kPoolTooSmall, "need " + std::to_string(n) + " reference pools, have " +
                                              std::to_string(available));
  std::vector<size_t> idx(available);
  std::iota(idx.begin(), idx.end(), size_t{0});
  for (size_t i = 0; i < n; ++i) {
    const size_t j = i + static_cast<size_t>(rng.UniformIndex(available - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

struct SaltResult {
  FeatureMatrix output;
  std::vector<double> weights;
};

/// O = (1 - p) * sum_j w_j * kNN(query, pool_j) + p * query.
inline SaltResult SaltInterpolate(const FeatureMatrix &query, std::span<const FeatureMatrix> pools,
                                  const SaltConfig &cfg, SeededRng &rng) {
  Validate(cfg);
  if (pools.size() != cfg.n)
    throw Error(ErrorCode::kInvalidArgument, "expected N=" + std::to_string(cfg.n) +
                                                 " pools, got " + std::to_string(pools.size()));
  std::vector<FeatureMatrix> selected;
  selected.reserve(pools.size());
  for (const auto &pool : pools) selected.push_back(KnnSelect(query, pool, cfg.k));

  SaltResult result;
  result.weights = SampleSaltWeights(cfg.n, rng);
  FeatureMatrix mixed(query.rows, query.cols);
  for (size_t j = 0; j < selected.size(); ++j)
    for (size_t i = 0; i < mixed.data.size(); ++i)
      mixed.data[i] += result.weights[j] * selected[j].data[i];

  result.output = FeatureMatrix(query.rows, query.cols);
  for (size_t i = 0; i < mixed.data.size(); ++i)
    result.output.data[i] = (1.0 - cfg.p) * mixed.data[i] + cfg.p * query.data[i];
  return result;
}

}  // namespace tse
