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
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tse_forge/error.hpp"
#include "tse_forge/features.hpp"
#include "tse_forge/manifest.hpp"
#include "tse_forge/rng.hpp"

namespace tse {

struct AnnotatedEntry {
  ManifestEntry entry;
  double sim = 0.0;  // cosine(target embedding, interference embedding)

  bool operator==(const AnnotatedEntry &) const = default;
};

using AnnotatedManifest = std::vector<AnnotatedEntry>;

inline AnnotatedManifest AnnotateSimilarity(const Manifest &manifest,
                                            const std::map<std::string, FeatureMatrix> &embeddings) {
  auto lookup = [&](const std::string &speaker) -> const FeatureMatrix & {
    auto it = embeddings.find(speaker);
    if (it == embeddings.end()) throw Error(ErrorCode::kMissingEmbedding, speaker);
    return it->second;
  };
  AnnotatedManifest out;
  out.reserve(manifest.size());
  for (const auto &e : manifest) {
    const double sim = CosineSimilarity(lookup(e.target_speaker), lookup(e.interference_speaker));
    out.push_back({e, sim});
  }
  return out;
}

inline nlohmann::ordered_json ToJson(const AnnotatedEntry &a) {
  auto j = ToJson(a.entry);
  j["sim"] = a.sim;
  return j;
}

inline AnnotatedEntry AnnotatedEntryFromJson(const nlohmann::json &j) {
  return {ManifestEntryFromJson(j), j.at("sim").get<double>()};
}

inline AnnotatedManifest ReadAnnotatedManifest(const std::filesystem::path &path) {
  return ReadJsonLines<AnnotatedEntry>(path, AnnotatedEntryFromJson);
}

inline void WriteAnnotatedManifest(const std::filesystem::path &path, const AnnotatedManifest &am) {
  std::string text;
  for (const auto &a : am) text += ToJson(a).dump() + "\n";
  WriteTextFile(path, text);
}

/// A named set of synthetic items (e.g. one synthetic-speaker corpus).
struct SyntheticPool {
  std::string id;
  std::vector<std::string> item_ids;

  bool operator==(const SyntheticPool &) const = default;
};

struct Stage {
  std::string name;
  std::vector<std::string> item_ids;
  std::vector<std::string> synthetic_pool_ids;
  double synth_ratio = 0.0;
  uint64_t step_budget = 1;

  bool operator==(const Stage &) const = default;
};

struct CurriculumPlan {
  double threshold = 0.5;
  double synth_ratio = 0.5;  // configured ratio for synthetic-enabled stages
  double stage1_fraction = 0.0;
  std::optional<uint64_t> seed;
  std::vector<SyntheticPool> pools;
  std::map<std::string, double> similarity;
  std::vector<Stage> stages;

  const SyntheticPool *FindPool(const std::string &id) const {
    for (const auto &p : pools)
      if (p.id == id) return &p;
    return nullptr;
  }

  bool operator==(const CurriculumPlan &) const = default;
};

/// Total step count split across the three base stages.
struct StageBudgets {
  uint64_t total_steps = 10000;
  std::array<double, 3> fractions{0.4, 0.4, 0.2};

  uint64_t For(size_t stage) const {
    const auto steps = static_cast<uint64_t>(std::floor(double(total_steps) * fractions[stage]));
    return std::max<uint64_t>(1, steps);
  }
};

/// Stage 1: pairs with similarity below `threshold`; stage 2: everything;
/// stage 3: everything plus the synthetic pools at `synth_ratio`.
inline CurriculumPlan PartitionStages(const AnnotatedManifest &am, double threshold = 0.5,
                                      std::vector<SyntheticPool> synth_pools = {},
                                      double synth_ratio = 0.5, StageBudgets budgets = {}) {
  if (!(threshold > -1.0 && threshold < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "threshold must be in (-1, 1)");
  if (!(synth_ratio >= 0.0 && synth_ratio <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "synth_ratio must be in [0, 1]");
  std::set<std::string> pool_names;
  for (const auto &p : synth_pools) {
    if (p.item_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "synthetic pool " + p.id + " is empty");
    if (!pool_names.insert(p.id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate pool " + p.id);
  }

  CurriculumPlan plan;
  plan.threshold = threshold;
  plan.synth_ratio = synth_ratio;
  Stage easy{"stage1", {}, {}, 0.0, budgets.For(0)};
  Stage all{"stage2", {}, {}, 0.0, budgets.For(1)};
  for (const auto &a : am) {
    plan.similarity[a.entry.id] = a.sim;
    all.item_ids.push_back(a.entry.id);
    if (a.sim < threshold) easy.item_ids.push_back(a.entry.id);
  }
  if (easy.item_ids.empty())
    throw Error(ErrorCode::kEmptyStage, "no pair has similarity below " + std::to_string(threshold));
  plan.stage1_fraction = double(easy.item_ids.size()) / double(am.size());

  Stage synth{"stage3", all.item_ids, {}, 0.0, budgets.For(2)};
  for (const auto &p : synth_pools) synth.synthetic_pool_ids.push_back(p.id);
  synth.synth_ratio = synth_pools.empty() ? 0.0 : synth_ratio;

  plan.pools = std::move(synth_pools);
  plan.stages = {std::move(easy), std::move(all), std::move(synth)};
  return plan;
}

/// Rebuilds the synthetic stages from `pool_sequence`: element i becomes
/// stage 3+i with stage 3's real items and budget and the given pool set.
/// [{SALT}, {SynVox2}] alternates pools; [{SynVox2, SALT}] is one combined
/// stage.
inline CurriculumPlan Stage4Alternation(const CurriculumPlan &plan,
                                        const std::vector<std::vector<std::string>> &pool_sequence,
                                        std::optional<double> synth_ratio = {}) {
  if (plan.stages.size() < 3)
    throw Error(ErrorCode::kInvalidArgument, "plan needs at least 3 stages");
  if (pool_sequence.empty()) throw Error(ErrorCode::kInvalidArgument, "pool sequence is empty");
  const double ratio = synth_ratio.value_or(plan.synth_ratio);
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "synth_ratio must be in [0, 1]");

  CurriculumPlan out = plan;
  const Stage base = plan.stages[2];
  out.stages.resize(2);
  for (size_t i = 0; i < pool_sequence.size(); ++i) {
    if (pool_sequence[i].empty())
      throw Error(ErrorCode::kInvalidArgument, "empty pool set at position " + std::to_string(i));
    for (const auto &id : pool_sequence[i])
      if (!plan.FindPool(id)) throw Error(ErrorCode::kUnknownPool, id);
    Stage s{"stage" + std::to_string(3 + i), base.item_ids, pool_sequence[i], ratio, base.step_budget};
    out.stages.push_back(std::move(s));
  }
  return out;
}

inline nlohmann::ordered_json ToJson(const CurriculumPlan &plan) {
  nlohmann::ordered_json j;
  j["threshold"] = plan.threshold;
  j["synth_ratio"] = plan.synth_ratio;
  j["stage1_fraction"] = plan.stage1_fraction;
  j["seed"] = plan.seed ? nlohmann::ordered_json(*plan.seed) : nlohmann::ordered_json(nullptr);
  j["pools"] = nlohmann::ordered_json::array();
  for (const auto &p : plan.pools) j["pools"].push_back({{"id", p.id}, {"item_ids", p.item_ids}});
  j["similarity"] = nlohmann::ordered_json::object();
  for (const auto &[id, sim] : plan.similarity) j["similarity"][id] = sim;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto &s : plan.stages) {
    j["stages"].push_back({{"name", s.name},
                           {"item_ids", s.item_ids},
                           {"synthetic_pool_ids", s.synthetic_pool_ids},
                           {"synth_ratio", s.synth_ratio},
                           {"step_budget", s.step_budget}});
  }
  return j;
}

inline CurriculumPlan CurriculumPlanFromJson(const nlohmann::json &j) {
  CurriculumPlan plan;
  try {
    plan.threshold = j.at("threshold").get<double>();
    plan.synth_ratio = j.at("synth_ratio").get<double>();
    plan.stage1_fraction = j.at("stage1_fraction").get<double>();
    if (j.contains("seed") && !j["seed"].is_null()) plan.seed = j["seed"].get<uint64_t>();
    for (const auto &p : j.at("pools"))
      plan.pools.push_back({p.at("id").get<std::string>(), p.at("item_ids").get<std::vector<std::string>>()});
    for (const auto &[id, sim] : j.at("similarity").items()) plan.similarity[id] = sim.get<double>();
    for (const auto &s : j.at("stages")) {
      plan.stages.push_back({s.at("name").get<std::string>(),
                             s.at("item_ids").get<std::vector<std::string>>(),
                             s.at("synthetic_pool_ids").get<std::vector<std::string>>(),
                             s.at("synth_ratio").get<double>(), s.at("step_budget").get<uint64_t>()});
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kParseError, std::string("curriculum plan: ") + e.what());
  }
  for (const auto &s : plan.stages)
    for (const auto &id : s.synthetic_pool_ids)
      if (!plan.FindPool(id)) throw Error(ErrorCode::kUnknownPool, id);
  return plan;
}

struct BatchItem {
  std::string id;
  std::optional<std::string> pool;  // empty for real items

  bool operator==(const BatchItem &) const = default;
};

struct Batch {
  uint64_t step = 0;
  size_t stage_index = 0;
  std::vector<BatchItem> items;

  size_t NumSynthetic() const {
    size_t n = 0;
    for (const auto &it : items) n += it.pool.has_value();
    return n;
  }
  bool operator==(const Batch &) const = default;
};

/// Number of synthetic items in a batch of `batch_size` at `ratio`.
inline size_t SyntheticCount(double ratio, size_t batch_size) {
  return static_cast<size_t>(std::lround(ratio * static_cast<double>(batch_size)));
}

/// Pull-based batch stream. Stages run in order for their step budgets;
/// real and synthetic items are each drawn without replacement from a
/// reshuffled pass over their stage's set.
class BatchScheduler {
 public:
  BatchScheduler(CurriculumPlan plan, size_t batch_size, uint64_t seed)
      : plan_(std::move(plan)), batch_size_(batch_size), rng_(seed) {
    if (batch_size_ < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
    for (const auto &s : plan_.stages) {
      if (s.item_ids.empty() && SyntheticCount(s.synth_ratio, batch_size_) < batch_size_)
        throw Error(ErrorCode::kEmptyStage, s.name + " has no real items");
      for (const auto &id : s.synthetic_pool_ids)
        if (!plan_.FindPool(id)) throw Error(ErrorCode::kUnknownPool, id);
      if (s.synth_ratio > 0.0 && SyntheticCount(s.synth_ratio, batch_size_) > 0 &&
          s.synthetic_pool_ids.empty())
        throw Error(ErrorCode::kInvalidArgument, s.name + " has synth_ratio > 0 but no pools");
    }
    if (!plan_.stages.empty()) EnterStage(0);
  }

  std::optional<Batch> Next() {
    while (stage_ < plan_.stages.size() && steps_in_stage_ >= plan_.stages[stage_].step_budget) {
      if (++stage_ < plan_.stages.size()) EnterStage(stage_);
    }
    if (stage_ >= plan_.stages.size()) return std::nullopt;

    const Stage &stage = plan_.stages[stage_];
    const size_t n_syn = synthetic_.empty() ? 0 : SyntheticCount(stage.synth_ratio, batch_size_);
    Batch batch;
    batch.step = step_;
    batch.stage_index = stage_;
    batch.items.reserve(batch_size_);
    for (size_t i = n_syn; i < batch_size_; ++i) batch.items.push_back(Draw(real_, real_pos_));
    for (size_t i = 0; i < n_syn; ++i) batch.items.push_back(Draw(synthetic_, synthetic_pos_));
    ++step_;
    ++steps_in_stage_;
    return batch;
  }

  const CurriculumPlan &plan() const { return plan_; }

 private:
  void EnterStage(size_t index) {
    const Stage &s = plan_.stages[index];
    real_.clear();
    for (const auto &id : s.item_ids) real_.push_back({id, std::nullopt});
    synthetic_.clear();
    std::set<std::string> used;
    for (const auto &pid : s.synthetic_pool_ids) {
      if (!used.insert(pid).second) continue;
      for (const auto &id : plan_.FindPool(pid)->item_ids) synthetic_.push_back({id, pid});
    }
    real_pos_ = real_.size();
    synthetic_pos_ = synthetic_.size();
    steps_in_stage_ = 0;
  }

  BatchItem Draw(std::vector<BatchItem> &items, size_t &pos) {
    if (pos >= items.size()) {
      rng_.Shuffle(std::span<BatchItem>(items));
      pos = 0;
    }
    return items[pos++];
  }

  CurriculumPlan plan_;
  size_t batch_size_;
  SeededRng rng_;
  size_t stage_ = 0;
  uint64_t step_ = 0;
  uint64_t steps_in_stage_ = 0;
  std::vector<BatchItem> real_, synthetic_;
  size_t real_pos_ = 0, synthetic_pos_ = 0;
};

inline std::vector<Batch> ScheduleBatches(const CurriculumPlan &plan, size_t batch_size, uint64_t seed) {
  BatchScheduler sched(plan, batch_size, seed);
  std::vector<Batch> out;
  while (auto b = sched.Next()) out.push_back(std::move(*b));
  return out;
}

inline nlohmann::ordered_json ToJson(const Batch &b, const CurriculumPlan &plan) {
  nlohmann::ordered_json j;
  j["step"] = b.step;
  j["stage"] = plan.stages[b.stage_index].name;
  j["real"] = nlohmann::ordered_json::array();
  j["synthetic"] = nlohmann::ordered_json::array();
  for (const auto &it : b.items) {
    if (it.pool)
      j["synthetic"].push_back({{"pool", *it.pool}, {"id", it.id}});
    else
      j["real"].push_back(it.id);
  }
  return j;
}

}  // namespace tse
