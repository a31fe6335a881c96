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

#include <set>

#include <gtest/gtest.h>

#include "tse_forge/curriculum.hpp"

namespace tse {
namespace {

FeatureMatrix Vec(std::vector<double> v) {
  return FeatureMatrix{1, static_cast<uint32_t>(v.size()), std::move(v)};
}

ManifestEntry Entry(const std::string &id, const std::string &t, const std::string &i) {
  ManifestEntry e;
  e.id = id;
  e.target_speaker = t;
  e.interference_speaker = i;
  e.mixture_path = "mix/" + id + ".wav";
  e.target_path = "target/" + id + ".wav";
  e.reference_path = "ref/" + id + ".wav";
  return e;
}

AnnotatedManifest WithSims(const std::vector<double> &sims) {
  AnnotatedManifest am;
  for (size_t i = 0; i < sims.size(); ++i)
    am.push_back({Entry("r" + std::to_string(i), "A", "B"), sims[i]});
  return am;
}

std::vector<SyntheticPool> Pools() {
  return {{"SALT", {"s0", "s1", "s2", "s3", "s4", "s5", "s6"}}, {"SynVox2", {"v0", "v1", "v2"}}};
}

TEST(AnnotateTest, CosineOfSpeakerEmbeddings) {
  const std::map<std::string, FeatureMatrix> emb = {
      {"A", Vec({1, 0, 0})}, {"B", Vec({2, 0, 0})}, {"C", Vec({0, 3, 0})}};
  const auto am = AnnotateSimilarity({Entry("0", "A", "B"), Entry("1", "A", "C")}, emb);
  EXPECT_NEAR(am[0].sim, 1.0, 1e-12);
  EXPECT_NEAR(am[1].sim, 0.0, 1e-12);
  try {
    AnnotateSimilarity({Entry("0", "A", "Z")}, emb);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingEmbedding);
  }
}

TEST(PartitionTest, ThresholdSplit) {
  const auto plan = PartitionStages(WithSims({0.2, 0.7, 0.4}), 0.5, Pools(), 0.5);
  ASSERT_EQ(plan.stages.size(), 3u);
  EXPECT_EQ(plan.stages[0].item_ids, (std::vector<std::string>{"r0", "r2"}));
  EXPECT_EQ(plan.stages[1].item_ids.size(), 3u);
  EXPECT_EQ(plan.stages[2].item_ids.size(), 3u);
  EXPECT_DOUBLE_EQ(plan.stages[2].synth_ratio, 0.5);
  EXPECT_DOUBLE_EQ(plan.stages[0].synth_ratio, 0.0);
  EXPECT_NEAR(plan.stage1_fraction, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(plan.stages[0].step_budget, 4000u);
  EXPECT_EQ(plan.stages[2].step_budget, 2000u);
}

TEST(PartitionTest, ThresholdIsStrict) {
  const auto plan = PartitionStages(WithSims({0.5, 0.49}));
  EXPECT_EQ(plan.stages[0].item_ids, (std::vector<std::string>{"r1"}));
}

TEST(PartitionTest, Errors) {
  try {
    PartitionStages(WithSims({0.9, 0.8}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyStage);
  }
  EXPECT_THROW(PartitionStages(WithSims({0.1}), 0.5, {}, 1.5), Error);
  EXPECT_THROW(PartitionStages(WithSims({0.1}), 1.0), Error);
}

TEST(AlternationTest, SequenceBecomesStages) {
  const auto base = PartitionStages(WithSims({0.2, 0.7, 0.4}), 0.5, Pools(), 0.5);
  const auto alt = Stage4Alternation(base, {{"SALT"}, {"SynVox2"}});
  ASSERT_EQ(alt.stages.size(), 4u);
  EXPECT_EQ(alt.stages[2].synthetic_pool_ids, (std::vector<std::string>{"SALT"}));
  EXPECT_EQ(alt.stages[3].synthetic_pool_ids, (std::vector<std::string>{"SynVox2"}));
  EXPECT_EQ(alt.stages[3].name, "stage4");
  EXPECT_EQ(alt.stages[3].item_ids, base.stages[2].item_ids);

  const auto combined = Stage4Alternation(base, {{"SynVox2", "SALT"}});
  ASSERT_EQ(combined.stages.size(), 3u);
  EXPECT_EQ(combined.stages[2].synthetic_pool_ids.size(), 2u);
}

TEST(AlternationTest, Errors) {
  const auto base = PartitionStages(WithSims({0.2}), 0.5, Pools());
  EXPECT_THROW(Stage4Alternation(base, {}), Error);
  EXPECT_THROW(Stage4Alternation(base, {{}}), Error);
  try {
    Stage4Alternation(base, {{"SALT"}, {"Nope"}});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownPool);
  }
}

TEST(PlanJsonTest, RoundTripIsLossless) {
  const auto base = PartitionStages(WithSims({0.2, 0.7, 0.4, 0.123456789012345}), 0.5, Pools(), 0.3);
  for (const auto &seq : std::vector<std::vector<std::vector<std::string>>>{
           {{"SALT"}, {"SynVox2"}}, {{"SynVox2", "SALT"}}, {{"SALT"}, {"SynVox2"}, {"SALT", "SynVox2"}}}) {
    auto plan = Stage4Alternation(base, seq);
    plan.seed = 42;
    const auto text = ToJson(plan).dump();
    const auto back = CurriculumPlanFromJson(nlohmann::json::parse(text));
    EXPECT_EQ(back, plan);
    EXPECT_EQ(ToJson(back).dump(), text);
  }
}

TEST(PlanJsonTest, RejectsUnknownPoolReference) {
  auto j = ToJson(PartitionStages(WithSims({0.2}), 0.5, Pools()));
  j["stages"][2]["synthetic_pool_ids"].push_back("Ghost");
  try {
    CurriculumPlanFromJson(nlohmann::json::parse(j.dump()));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownPool);
  }
  EXPECT_THROW(CurriculumPlanFromJson(nlohmann::json::parse("{\"threshold\": 0.5}")), Error);
}

CurriculumPlan SmallPlan(double ratio, uint64_t total = 30) {
  StageBudgets budgets;
  budgets.total_steps = total;
  std::vector<double> sims;
  for (int i = 0; i < 12; ++i) sims.push_back(i < 5 ? 0.1 * i : 0.6 + 0.01 * i);
  return PartitionStages(WithSims(sims), 0.5, Pools(), ratio, budgets);
}

TEST(SchedulerTest, SyntheticShareMatchesRatio) {
  const auto plan = SmallPlan(0.5);
  for (const auto &b : ScheduleBatches(plan, 10, 1)) {
    ASSERT_EQ(b.items.size(), 10u);
    EXPECT_EQ(b.NumSynthetic(), b.stage_index == 2 ? 5u : 0u);
  }
  for (size_t bs : {1u, 3u, 7u, 9u}) {
    for (const auto &b : ScheduleBatches(plan, bs, 2))
      if (b.stage_index == 2) {
        EXPECT_EQ(b.NumSynthetic(), size_t(std::lround(0.5 * double(bs))));
      }
  }
}

TEST(SchedulerTest, RatioExtremes) {
  for (const auto &b : ScheduleBatches(SmallPlan(0.0), 8, 1)) EXPECT_EQ(b.NumSynthetic(), 0u);
  for (const auto &b : ScheduleBatches(SmallPlan(1.0), 8, 1))
    EXPECT_EQ(b.NumSynthetic(), b.stage_index == 2 ? 8u : 0u);
}

TEST(SchedulerTest, StageOneOnlyHoldsEasyPairs) {
  const auto plan = SmallPlan(0.5);
  for (const auto &b : ScheduleBatches(plan, 4, 3)) {
    if (b.stage_index != 0) continue;
    for (const auto &it : b.items) EXPECT_LT(plan.similarity.at(it.id), 0.5);
  }
}

TEST(SchedulerTest, BudgetsAndOrder) {
  const auto batches = ScheduleBatches(SmallPlan(0.5, 100), 4, 3);
  ASSERT_EQ(batches.size(), 100u);
  for (size_t i = 0; i < batches.size(); ++i) {
    EXPECT_EQ(batches[i].step, i);
    EXPECT_EQ(batches[i].stage_index, i < 40 ? 0u : i < 80 ? 1u : 2u);
  }
}

TEST(SchedulerTest, WithoutReplacementWithinPass) {
  // 12 real items, batch of 4: every 3 consecutive stage-2 batches cover all.
  const auto batches = ScheduleBatches(SmallPlan(0.5, 100), 4, 5);
  for (size_t start = 40; start < 76; start += 3) {
    std::set<std::string> seen;
    for (size_t i = start; i < start + 3; ++i)
      for (const auto &it : batches[i].items) seen.insert(it.id);
    EXPECT_EQ(seen.size(), 12u) << start;
  }
}

TEST(SchedulerTest, DeterministicBySeed) {
  const auto plan = Stage4Alternation(SmallPlan(0.5), {{"SALT"}, {"SynVox2"}});
  EXPECT_EQ(ScheduleBatches(plan, 6, 9), ScheduleBatches(plan, 6, 9));
  EXPECT_NE(ScheduleBatches(plan, 6, 9), ScheduleBatches(plan, 6, 10));
  for (const auto &b : ScheduleBatches(plan, 6, 9)) {
    for (const auto &it : b.items) {
      if (!it.pool) continue;
      EXPECT_EQ(*it.pool, b.stage_index == 2 ? "SALT" : "SynVox2");
    }
  }
}

TEST(SchedulerTest, BatchJsonSplitsRealAndSynthetic) {
  const auto plan = SmallPlan(0.5);
  const auto batches = ScheduleBatches(plan, 4, 1);
  const auto j = ToJson(batches.back(), plan);
  EXPECT_EQ(j["stage"], "stage3");
  EXPECT_EQ(j["real"].size(), 2u);
  EXPECT_EQ(j["synthetic"].size(), 2u);
  EXPECT_TRUE(j["synthetic"][0].contains("pool"));
}

TEST(SchedulerTest, RejectsZeroBatch) { EXPECT_THROW(BatchScheduler(SmallPlan(0.5), 0, 1), Error); }

}  // namespace
}  // namespace tse
