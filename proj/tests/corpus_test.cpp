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

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "support/desk_corpus.hpp"
#include "support/oracles.hpp"
#include "tse_forge/corpus.hpp"
#include "tse_forge/manifest.hpp"

namespace tse {
namespace {

namespace fs = std::filesystem;

std::string Header() { return std::string(kRegistryHeader) + "\n"; }

Registry Parse(const std::string &text) {
  std::istringstream in(text);
  return ParseRegistry(in, "/data", "reg.tsv");
}

UtteranceRecord Rec(const std::string &utt, const std::string &spk, double dur,
                    Gender g = Gender::kMale) {
  return {utt, spk, g, "/x/" + utt + ".wav", dur};
}

std::string ReadAll(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TEST(RegistryTest, ParsesRowsAndResolvesPaths) {
  const auto reg = Parse(Header() + "u1\tA\tmale\ta/u1.wav\t3.5\n" + "u2\tA\tf\t/abs/u2.wav\t2\n" +
                         "u3\tB\tfemale\tu3.wav\t4.25\n");
  ASSERT_EQ(reg.size(), 3u);
  EXPECT_EQ(reg.NumSpeakers(), 2u);
  EXPECT_EQ(reg.records[0].path, fs::path("/data/a/u1.wav"));
  EXPECT_EQ(reg.records[1].path, fs::path("/abs/u2.wav"));
  EXPECT_EQ(reg.records[1].gender, Gender::kFemale);
  EXPECT_DOUBLE_EQ(reg.records[2].duration_s, 4.25);
}

TEST(RegistryTest, BadGenderNamesLine) {
  try {
    Parse(Header() + "u1\tA\tmale\tu1.wav\t3\n" + "u2\tA\tx\tu2.wav\t3\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(RegistryTest, RejectsMalformedRows) {
  for (const std::string row : {"u1\tA\tmale\tu1.wav\n", "u1\tA\tmale\tu1.wav\tabc\n",
                                "u1\tA\tmale\tu1.wav\t-1\n", "\tA\tmale\tu1.wav\t2\n"}) {
    try {
      Parse(Header() + row);
      FAIL() << row;
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kParseError);
    }
  }
  EXPECT_THROW(Parse("u1\tA\tmale\tu1.wav\t2\n"), Error);
}

TEST(RegistryTest, DuplicateId) {
  try {
    Parse(Header() + "u1\tA\tmale\tu1.wav\t3\n" + "u1\tB\tmale\tu9.wav\t3\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
  }
}

TEST(RegistryTest, SerializeRoundTrip) {
  Registry reg;
  reg.records = {Rec("a", "S", 2.5), Rec("b", "S", 3.125, Gender::kFemale)};
  std::istringstream in(SerializeRegistry(reg));
  const auto back = ParseRegistry(in, "/");
  EXPECT_EQ(back.records, reg.records);
}

TEST(FilterTest, ShortUtteranceDropsSpeaker) {
  Registry reg;
  reg.records = {Rec("a1", "A", 1.5), Rec("a2", "A", 3), Rec("a3", "A", 4),
                 Rec("b1", "B", 3), Rec("b2", "B", 3), Rec("b3", "B", 3)};
  const auto [kept, report] = FilterTargets(reg);
  EXPECT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept.NumSpeakers(), 1u);
  EXPECT_EQ(report.short_utterances_dropped, 1u);
  EXPECT_EQ(report.speakers_dropped, 1u);
  EXPECT_EQ(report.utterances_of_dropped_speakers, 2u);
}

TEST(FilterTest, ExactlyTwoSecondsIsKept) {
  Registry reg;
  reg.records = {Rec("a1", "A", 2.0), Rec("a2", "A", 2.0), Rec("a3", "A", 2.0)};
  EXPECT_EQ(FilterTargets(reg).first.size(), 3u);
}

TEST(FilterTest, EngineeredSpeakersFail) {
  Registry reg;
  for (int s = 0; s < 1151; ++s) {
    const std::string spk = "S" + std::to_string(s);
    const bool fail = s % 37 == 5 && s / 37 < 31;
    for (int u = 0; u < 4; ++u) {
      // Failing speakers: one long, three short (or two long when s is even).
      double dur = 3.0;
      if (fail) dur = (u == 0 || (s % 2 == 0 && u == 1)) ? 3.0 : 1.0;
      reg.records.push_back(Rec(spk + "_" + std::to_string(u), spk, dur));
    }
  }
  const auto [kept, report] = FilterTargets(reg);
  EXPECT_EQ(report.input_speakers, 1151u);
  EXPECT_EQ(kept.NumSpeakers(), 1120u);
  EXPECT_EQ(report.speakers_dropped, 31u);
  EXPECT_EQ(kept.size(), 1120u * 4);
}

TEST(FilterTest, Properties) {
  SeededRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Registry reg;
    const size_t n = 1 + rng.UniformIndex(80);
    for (size_t i = 0; i < n; ++i)
      reg.records.push_back(Rec("u" + std::to_string(i), "S" + std::to_string(rng.UniformIndex(12)),
                                rng.Uniform(0.5, 5.0)));
    try {
      const auto [kept, report] = FilterTargets(reg);
      std::map<std::string, size_t> count;
      for (const auto &r : kept.records) {
        EXPECT_GE(r.duration_s, 2.0);
        ++count[r.speaker_id];
      }
      for (const auto &[spk, c] : count) EXPECT_GE(c, 3u);
      EXPECT_EQ(report.kept_utterances + report.short_utterances_dropped +
                    report.utterances_of_dropped_speakers,
                report.input_utterances);
      // Filtering is idempotent.
      EXPECT_EQ(FilterTargets(kept).first.records, kept.records);
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kEmptyResult);
    }
  }
}

Registry Interferers() {
  Registry reg;
  for (int s = 0; s < 3; ++s)
    for (int u = 0; u < 2; ++u) {
      reg.records.push_back(Rec("im" + std::to_string(s) + std::to_string(u), "M" + std::to_string(s), 3));
      reg.records.push_back(
          Rec("if" + std::to_string(s) + std::to_string(u), "F" + std::to_string(s), 3, Gender::kFemale));
    }
  return reg;
}

TEST(PlanPairsTest, AlternatesGenders) {
  Registry targets;
  for (int i = 0; i < 4; ++i) targets.records.push_back(Rec("t" + std::to_string(i), "T", 3));
  SeededRng rng(1);
  const auto plan = PlanPairs(targets, Interferers(), rng);
  ASSERT_EQ(plan.items.size(), 4u);
  const Gender want[] = {Gender::kMale, Gender::kFemale, Gender::kMale, Gender::kFemale};
  for (size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(plan.items[k].interferer.gender, want[k]);
    EXPECT_EQ(plan.items[k].target_index, k);
  }
}

TEST(PlanPairsTest, NeverPairsSameSpeaker) {
  Registry targets, interferers = Interferers();
  for (int i = 0; i < 40; ++i) targets.records.push_back(Rec("t" + std::to_string(i), i % 2 ? "F0" : "M0", 3));
  SeededRng rng(2);
  for (const auto &item : PlanPairs(targets, interferers, rng).items)
    EXPECT_NE(item.interferer.speaker_id, targets.records[item.target_index].speaker_id);
}

TEST(PlanPairsTest, MissingGenderAndDeterminism) {
  Registry targets, males;
  targets.records = {Rec("t0", "T", 3), Rec("t1", "T", 3)};
  males.records = {Rec("m0", "M", 3)};
  SeededRng rng(1);
  try {
    PlanPairs(targets, males, rng);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingGender);
  }
  SeededRng a(9), b(9);
  const auto pa = PlanPairs(targets, Interferers(), a), pb = PlanPairs(targets, Interferers(), b);
  for (size_t k = 0; k < pa.items.size(); ++k) EXPECT_EQ(pa.items[k].interferer, pb.items[k].interferer);
}

class BuildCorpusTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::ScratchDir("corpus"));
    testing::DeskCorpusSpec spec;
    spec.target_speakers = 4;
    spec.utterances_per_speaker = 3;
    spec.interferer_speakers_per_gender = 2;
    spec.utterances_per_interferer = 2;
    spec.noise_clips = 2;
    desk_ = new testing::DeskCorpus(testing::GenerateDeskCorpus(*dir_ / "desk", spec));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete desk_;
    delete dir_;
  }

  PairPlan Plan(uint64_t seed) const {
    const auto targets = FilterTargets(LoadRegistry(desk_->targets_tsv)).first;
    SeededRng rng(seed);
    return PlanPairs(targets, LoadRegistry(desk_->interferers_tsv), rng);
  }

  static fs::path *dir_;
  static testing::DeskCorpus *desk_;
};
fs::path *BuildCorpusTest::dir_ = nullptr;
testing::DeskCorpus *BuildCorpusTest::desk_ = nullptr;

TEST_F(BuildCorpusTest, TwoItemsWriteSixFiles) {
  PairPlan plan = Plan(1);
  plan.items.resize(2);
  CorpusConfig cfg;
  cfg.global_seed = 7;
  const auto out = *dir_ / "two";
  const auto report = BuildCorpus(plan, cfg, out);
  ASSERT_EQ(report.manifest.size(), 2u);
  size_t wavs = 0;
  for (const auto &p : fs::recursive_directory_iterator(out))
    if (p.path().extension() == ".wav") ++wavs;
  EXPECT_EQ(wavs, 6u);
  EXPECT_EQ(ReadManifest(out / "manifest.jsonl"), report.manifest);
  for (const auto &e : report.manifest) {
    EXPECT_EQ(ReadWav(out / e.mixture_path).size(), 96000u);
    EXPECT_EQ(ReadWav(out / e.target_path).size(), 96000u);
    const double ref_s = ReadWav(out / e.reference_path).duration_s();
    EXPECT_LE(ref_s, 15.0);
    EXPECT_GT(ref_s, 0.0);
  }
}

TEST_F(BuildCorpusTest, ManifestSnrMatchesWrittenAudio) {
  CorpusConfig cfg;
  cfg.global_seed = 3;
  const auto out = *dir_ / "snr";
  const auto report = BuildCorpus(Plan(3), cfg, out);
  for (const auto &e : report.manifest) {
    const auto s = ReadWav(out / e.target_path).samples;
    // m - s is the scaled interference, so this is P(s) / P(m - s).
    const auto m = ReadWav(out / e.mixture_path).samples;
    EXPECT_NEAR(testing::RawSnrDb(s, m), e.snr_db, 0.01) << e.id;
    EXPECT_GE(e.snr_db, -5.0);
    EXPECT_LT(e.snr_db, 5.0);
    EXPECT_NE(e.target_speaker, e.interference_speaker);
  }
}

TEST_F(BuildCorpusTest, ReferenceExcludesTargetUtterance) {
  const PairPlan plan = Plan(4);
  std::unordered_map<std::string, std::vector<size_t>> by_speaker;
  for (size_t i = 0; i < plan.targets.size(); ++i) by_speaker[plan.targets.records[i].speaker_id].push_back(i);
  CorpusConfig cfg;
  cfg.reference.min_seconds = 1e-3;  // exactly one utterance
  cfg.reference.max_seconds = 100.0;
  for (size_t k = 0; k < plan.items.size(); ++k) {
    const auto item = RenderItem(plan, k, cfg, by_speaker);
    const auto &target = plan.targets.records[plan.items[k].target_index];
    bool matched_other = false;
    for (size_t idx : by_speaker.at(target.speaker_id)) {
      const auto w = LoadNormalized(plan.targets.records[idx].path, cfg.level_dbov);
      if (w == item.reference) {
        EXPECT_NE(idx, plan.items[k].target_index);
        matched_other = true;
      }
    }
    EXPECT_TRUE(matched_other);
  }
}

TEST_F(BuildCorpusTest, DeterministicAcrossRunsAndWorkers) {
  const PairPlan plan = Plan(5);
  CorpusConfig cfg;
  cfg.global_seed = 11;
  BuildCorpus(plan, cfg, *dir_ / "a");
  BuildCorpus(plan, cfg, *dir_ / "b");
  cfg.workers = 4;
  BuildCorpus(plan, cfg, *dir_ / "c");
  for (const auto &p : fs::recursive_directory_iterator(*dir_ / "a")) {
    if (!p.is_regular_file()) continue;
    const auto rel = p.path().lexically_relative(*dir_ / "a");
    const auto bytes = ReadAll(p.path());
    EXPECT_EQ(bytes, ReadAll(*dir_ / "b" / rel)) << rel;
    EXPECT_EQ(bytes, ReadAll(*dir_ / "c" / rel)) << rel;
  }
}

TEST_F(BuildCorpusTest, FailureRemovesPartialOutput) {
  PairPlan plan = Plan(6);
  plan.items[plan.items.size() - 1].interferer.path = *dir_ / "missing.wav";
  const auto out = *dir_ / "fail";
  CorpusConfig cfg;
  cfg.workers = 2;
  try {
    BuildCorpus(plan, cfg, out);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("item " + ItemId(plan.items.size() - 1)), std::string::npos) << e.what();
  }
  EXPECT_FALSE(fs::exists(out / "mix"));
  EXPECT_FALSE(fs::exists(out / "manifest.jsonl"));
}

TEST_F(BuildCorpusTest, InvalidConfig) {
  CorpusConfig cfg;
  cfg.workers = 0;
  EXPECT_THROW(BuildCorpus(Plan(1), cfg, *dir_ / "bad"), Error);
}

TEST_F(BuildCorpusTest, NoiseAugmentation) {
  CorpusConfig cfg;
  const auto base = *dir_ / "clean";
  const auto built = BuildCorpus(Plan(8), cfg, base);
  const auto noise = ReadPathList(desk_->noise_list);
  ASSERT_EQ(noise.size(), 2u);
  const auto out = *dir_ / "noisy";
  NoiseConfig ncfg;
  ncfg.probability = 1.0;
  const auto report = AugmentCorpus(built.manifest, base, noise, ncfg, 5, 2, out);
  EXPECT_EQ(report.applied, built.manifest.size());
  for (size_t k = 0; k < report.manifest.size(); ++k) {
    const auto &e = report.manifest[k];
    ASSERT_TRUE(e.noise_snr_db.has_value());
    EXPECT_GE(*e.noise_snr_db, -5.0);
    EXPECT_LT(*e.noise_snr_db, 10.0);
    EXPECT_EQ(ReadAll(out / e.target_path), ReadAll(base / built.manifest[k].target_path));
    EXPECT_NE(ReadAll(out / e.mixture_path), ReadAll(base / built.manifest[k].mixture_path));
    EXPECT_EQ(e.snr_db, built.manifest[k].snr_db);
  }

  ncfg.probability = 0.0;
  const auto clean = AugmentCorpus(built.manifest, base, noise, ncfg, 5, 1, *dir_ / "noisy0");
  EXPECT_EQ(clean.applied, 0u);
  for (size_t k = 0; k < clean.manifest.size(); ++k) {
    EXPECT_FALSE(clean.manifest[k].noise_path.has_value());
    EXPECT_EQ(ReadAll(*dir_ / "noisy0" / clean.manifest[k].mixture_path),
              ReadAll(base / built.manifest[k].mixture_path));
  }
  EXPECT_THROW(AugmentCorpus(built.manifest, base, {}, ncfg, 5, 1, *dir_ / "noisy1"), Error);
}

TEST_F(BuildCorpusTest, SummaryCountsGendersAndDurations) {
  CorpusConfig cfg;
  const auto out = *dir_ / "stats";
  const auto built = BuildCorpus(Plan(9), cfg, out);
  const auto st = SummarizeManifest(built.manifest, out);
  EXPECT_EQ(st.count, built.manifest.size());
  EXPECT_EQ(st.male_interferers, (st.count + 1) / 2);
  EXPECT_EQ(st.female_interferers, st.count / 2);
  EXPECT_NEAR(st.mixture_seconds, 6.0 * double(st.count), 1e-9);
  size_t hist = 0;
  for (size_t h : st.snr_histogram) hist += h;
  EXPECT_EQ(hist, st.count);
  EXPECT_LE(st.snr_min_db, st.snr_mean_db);
  EXPECT_LE(st.snr_mean_db, st.snr_max_db);
}

}  // namespace
}  // namespace tse
