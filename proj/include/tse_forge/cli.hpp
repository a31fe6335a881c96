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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/corpus.hpp"
#include "tse_forge/curriculum.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/features.hpp"
#include "tse_forge/level.hpp"
#include "tse_forge/manifest.hpp"
#include "tse_forge/metrics.hpp"
#include "tse_forge/mixing.hpp"

namespace tse::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Logger on stderr; verbosity from TSE_FORGE_LOG (trace..off, default info).
inline std::shared_ptr<spdlog::logger> Log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>("tse-forge",
                                              std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    const char *env = std::getenv("TSE_FORGE_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
    return l;
  }();
  return logger;
}

struct CommonOptions {
  uint64_t seed = 0;
  size_t workers = 1;
  bool json_output = false;
};

inline void AddCommon(CLI::App *cmd, CommonOptions &opt) {
  cmd->add_option("--seed", opt.seed, "Global seed; all randomness derives from it");
  cmd->add_option("--workers", opt.workers, "Worker threads (never changes outputs)")
      ->check(CLI::Range(size_t{1}, size_t{1024}));
  cmd->add_flag("--json", opt.json_output, "Print a machine-readable summary");
}

inline void Require(bool ok, const std::string &message) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, message);
}

/// config.json: every output-affecting parameter of the run.
inline void WriteConfig(const fs::path &out_dir, const json &config) {
  WriteTextFile(out_dir / "config.json", config.dump(2) + "\n");
}

inline void Emit(std::ostream &out, bool as_json, const json &summary, const std::string &text) {
  if (as_json)
    out << summary.dump() << "\n";
  else
    out << text;
}

// ---------------------------------------------------------------- build-corpus

struct BuildCorpusArgs {
  CommonOptions common;
  std::string targets, interferers, out;
  double segment_seconds = 6.0;
  double level_dbov = -26.0;
  double snr_min = -5.0, snr_max = 5.0;
  double ref_min = 10.0, ref_max = 15.0;
  double min_duration = 2.0;
  size_t min_utterances = 3;
};

inline int RunBuildCorpus(const BuildCorpusArgs &a, std::ostream &out) {
  Require(a.snr_min <= a.snr_max, "--snr-min must be <= --snr-max");
  Require(a.ref_min <= a.ref_max, "--ref-min must be <= --ref-max");

  const Registry targets = LoadRegistry(a.targets);
  const Registry interferers = LoadRegistry(a.interferers);
  auto [filtered, filter] = FilterTargets(targets, {a.min_duration, a.min_utterances});
  Log()->info("targets: {} utterances / {} speakers kept of {} / {}", filter.kept_utterances,
              filter.kept_speakers, filter.input_utterances, filter.input_speakers);

  SeededRng plan_rng(DeriveSeed(a.common.seed, "plan"));
  const PairPlan plan = PlanPairs(filtered, interferers, plan_rng);

  CorpusConfig cfg;
  cfg.global_seed = a.common.seed;
  cfg.workers = a.common.workers;
  cfg.segment_seconds = a.segment_seconds;
  cfg.level_dbov = a.level_dbov;
  cfg.snr = {a.snr_min, a.snr_max};
  cfg.reference = {a.ref_min, a.ref_max};
  fs::create_directories(a.out);
  const CorpusReport report = BuildCorpus(plan, cfg, a.out);

  json config{{"subcommand", "build-corpus"},
              {"seed", a.common.seed},
              {"targets", a.targets},
              {"interferers", a.interferers},
              {"segment_seconds", a.segment_seconds},
              {"level_dbov", a.level_dbov},
              {"snr_min_db", a.snr_min},
              {"snr_max_db", a.snr_max},
              {"reference_min_s", a.ref_min},
              {"reference_max_s", a.ref_max},
              {"min_duration_s", a.min_duration},
              {"min_utterances", a.min_utterances}};
  WriteConfig(a.out, config);

  json summary{{"items", report.manifest.size()},
               {"clipped_samples", report.clipped_samples},
               {"input_speakers", filter.input_speakers},
               {"kept_speakers", filter.kept_speakers},
               {"speakers_dropped", filter.speakers_dropped},
               {"short_utterances_dropped", filter.short_utterances_dropped},
               {"manifest", (fs::path(a.out) / "manifest.jsonl").string()}};
  std::ostringstream text;
  text << "built " << report.manifest.size() << " triplets in " << a.out << "\n"
       << "speakers kept " << filter.kept_speakers << " of " << filter.input_speakers << " ("
       << filter.speakers_dropped << " dropped, " << filter.short_utterances_dropped
       << " short utterances removed)\n";
  if (report.clipped_samples > 0) text << "clipped samples: " << report.clipped_samples << "\n";
  Emit(out, a.common.json_output, summary, text.str());
  return kExitOk;
}

// --------------------------------------------------------------- augment-noise

struct AugmentNoiseArgs {
  CommonOptions common;
  std::string manifest, noise_list, out;
  double probability = 0.5;
  double snr_min = -5.0, snr_max = 10.0;
};

inline int RunAugmentNoise(const AugmentNoiseArgs &a, std::ostream &out) {
  Require(a.snr_min <= a.snr_max, "--noise-snr-min must be <= --noise-snr-max");
  const Manifest manifest = ReadManifest(a.manifest);
  const auto noise = ReadPathList(a.noise_list);
  NoiseConfig cfg{a.probability, {a.snr_min, a.snr_max}};
  fs::create_directories(a.out);
  const auto report = AugmentCorpus(manifest, fs::path(a.manifest).parent_path(), noise, cfg,
                                    a.common.seed, a.common.workers, a.out);
  WriteConfig(a.out, json{{"subcommand", "augment-noise"},
                          {"seed", a.common.seed},
                          {"manifest", a.manifest},
                          {"noise_list", a.noise_list},
                          {"noise_probability", a.probability},
                          {"noise_snr_min_db", a.snr_min},
                          {"noise_snr_max_db", a.snr_max}});
  json summary{{"items", report.manifest.size()},
               {"noise_applied", report.applied},
               {"clipped_samples", report.clipped_samples}};
  std::ostringstream text;
  text << "noise added to " << report.applied << " of " << report.manifest.size() << " mixtures\n";
  Emit(out, a.common.json_output, summary, text.str());
  return kExitOk;
}

// ----------------------------------------------------------------- salt-interp

struct SaltArgs {
  CommonOptions common;
  std::vector<std::string> queries, pools;
  std::string pool_dir, out;
  size_t k = 4;
  double p = 0.5;
  size_t n = 4;
};

inline std::vector<fs::path> ListFiles(const fs::path &dir, const std::string &ext) {
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline int RunSalt(const SaltArgs &a, std::ostream &out) {
  std::vector<fs::path> pool_paths(a.pools.begin(), a.pools.end());
  if (!a.pool_dir.empty())
    for (auto &p : ListFiles(a.pool_dir, ".fmx")) pool_paths.push_back(p);
  Require(!pool_paths.empty(), "no reference pools given (--pool or --pool-dir)");
  const SaltConfig cfg{a.k, a.p, a.n};
  Validate(cfg);

  std::vector<FeatureMatrix> pools;
  for (const auto &p : pool_paths) pools.push_back(ReadFmx(p));
  fs::create_directories(a.out);

  json outputs = json::array();
  for (const auto &q : a.queries) {
    const fs::path qpath(q);
    const FeatureMatrix query = ReadFmx(qpath);
    const std::string stem = qpath.stem().string();
    SeededRng rng(DeriveSeed(a.common.seed, "salt", stem));
    const auto chosen = SelectReferencePools(pools.size(), cfg.n, rng);
    std::vector<FeatureMatrix> selected;
    json chosen_paths = json::array();
    for (size_t idx : chosen) {
      selected.push_back(pools[idx]);
      chosen_paths.push_back(pool_paths[idx].generic_string());
    }
    SaltResult result;
    try {
      result = SaltInterpolate(query, selected, cfg, rng);
    } catch (const Error &e) {
      RethrowWithContext(e, q);
    }
    const fs::path out_fmx = fs::path(a.out) / (stem + ".fmx");
    WriteFmx(out_fmx, result.output);
    json log{{"query", qpath.generic_string()}, {"output", out_fmx.generic_string()},
             {"pools", chosen_paths},           {"weights", result.weights},
             {"k", cfg.k},                      {"p", cfg.p},
             {"N", cfg.n},                      {"seed", a.common.seed}};
    WriteTextFile(fs::path(a.out) / (stem + ".weights.json"), log.dump(2) + "\n");
    outputs.push_back(log);
  }
  WriteConfig(a.out, json{{"subcommand", "salt-interp"},
                          {"seed", a.common.seed},
                          {"k", cfg.k},
                          {"p", cfg.p},
                          {"N", cfg.n},
                          {"queries", a.queries},
                          {"pools", [&] {
                             json j = json::array();
                             for (const auto &p : pool_paths) j.push_back(p.generic_string());
                             return j;
                           }()}});
  std::ostringstream text;
  text << "interpolated " << a.queries.size() << " queries against " << pools.size()
       << " reference pools (k=" << cfg.k << ", p=" << cfg.p << ", N=" << cfg.n << ")\n";
  Emit(out, a.common.json_output, json{{"outputs", outputs}}, text.str());
  return kExitOk;
}

// ------------------------------------------------------------- plan-curriculum

struct PlanArgs {
  CommonOptions common;
  bool seed_given = false;
  std::string manifest, annotated, embeddings, out;
  double threshold = 0.5;
  double synth_ratio = 0.5;
  uint64_t total_steps = 10000;
  std::vector<double> fractions{0.4, 0.4, 0.2};
  std::vector<std::string> synth_pools;  // NAME=manifest.jsonl
  std::vector<std::string> alternate;    // "A+B" pool sets, in order
};

inline std::map<std::string, FeatureMatrix> LoadEmbeddings(const fs::path &dir) {
  std::map<std::string, FeatureMatrix> out;
  for (const auto &p : ListFiles(dir, ".fmx")) out.emplace(p.stem().string(), ReadFmx(p));
  return out;
}

inline std::vector<std::string> SplitOn(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep))
    if (!part.empty()) parts.push_back(part);
  return parts;
}

inline int RunPlan(const PlanArgs &a, std::ostream &out) {
  Require(a.manifest.empty() != a.annotated.empty(), "give exactly one of --manifest or --annotated");
  Require(a.annotated.empty() || a.embeddings.empty(), "--embeddings only applies with --manifest");
  Require(!a.manifest.empty() ? !a.embeddings.empty() : true, "--manifest requires --embeddings");
  Require(a.fractions.size() == 3, "--stage-fractions takes exactly three values");

  fs::create_directories(a.out);
  AnnotatedManifest am;
  if (!a.annotated.empty()) {
    am = ReadAnnotatedManifest(a.annotated);
  } else {
    am = AnnotateSimilarity(ReadManifest(a.manifest), LoadEmbeddings(a.embeddings));
    WriteAnnotatedManifest(fs::path(a.out) / "annotated.jsonl", am);
  }

  std::vector<SyntheticPool> pools;
  for (const auto &spec : a.synth_pools) {
    const auto eq = spec.find('=');
    Require(eq != std::string::npos && eq > 0, "--synth-pool expects NAME=manifest.jsonl, got '" + spec + "'");
    SyntheticPool pool{spec.substr(0, eq), {}};
    for (const auto &e : ReadManifest(spec.substr(eq + 1))) pool.item_ids.push_back(e.id);
    pools.push_back(std::move(pool));
  }

  StageBudgets budgets{a.total_steps, {a.fractions[0], a.fractions[1], a.fractions[2]}};
  CurriculumPlan plan = PartitionStages(am, a.threshold, pools, a.synth_ratio, budgets);
  if (!a.alternate.empty()) {
    std::vector<std::vector<std::string>> sequence;
    for (const auto &set : a.alternate) sequence.push_back(SplitOn(set, '+'));
    plan = Stage4Alternation(plan, sequence);
  }
  if (a.seed_given) plan.seed = a.common.seed;
  WriteTextFile(fs::path(a.out) / "plan.json", ToJson(plan).dump(2) + "\n");
  WriteConfig(a.out, json{{"subcommand", "plan-curriculum"},
                          {"seed", plan.seed ? json(*plan.seed) : json(nullptr)},
                          {"manifest", a.manifest},
                          {"annotated", a.annotated},
                          {"embeddings", a.embeddings},
                          {"threshold", a.threshold},
                          {"synth_ratio", a.synth_ratio},
                          {"total_steps", a.total_steps},
                          {"stage_fractions", a.fractions},
                          {"synth_pools", a.synth_pools},
                          {"alternate", a.alternate}});

  json stages = json::array();
  std::ostringstream text;
  text << "stage-1 fraction: " << plan.stage1_fraction << " (" << plan.stages[0].item_ids.size()
       << " of " << am.size() << " items with sim < " << plan.threshold << ")\n";
  for (const auto &s : plan.stages) {
    stages.push_back({{"name", s.name},
                      {"items", s.item_ids.size()},
                      {"pools", s.synthetic_pool_ids},
                      {"synth_ratio", s.synth_ratio},
                      {"step_budget", s.step_budget}});
    text << s.name << ": " << s.item_ids.size() << " real items";
    if (!s.synthetic_pool_ids.empty()) {
      text << ", pools";
      for (const auto &p : s.synthetic_pool_ids) text << " " << p;
      text << " at ratio " << s.synth_ratio;
    }
    text << ", " << s.step_budget << " steps\n";
  }
  Emit(out, a.common.json_output,
       json{{"stage1_fraction", plan.stage1_fraction}, {"stages", stages},
            {"plan", (fs::path(a.out) / "plan.json").string()}},
       text.str());
  return kExitOk;
}

// -------------------------------------------------------------------- schedule

struct ScheduleArgs {
  CommonOptions common;
  std::string plan, out;
  size_t batch_size = 48;
};

inline CurriculumPlan ReadPlan(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  try {
    return CurriculumPlanFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

inline int RunSchedule(const ScheduleArgs &a, std::ostream &out) {
  const CurriculumPlan plan = ReadPlan(a.plan);
  fs::create_directories(a.out);
  std::ofstream batches(fs::path(a.out) / "batches.jsonl", std::ios::binary | std::ios::trunc);
  if (!batches) throw Error(ErrorCode::kIoError, "cannot create batches.jsonl in " + a.out);

  BatchScheduler sched(plan, a.batch_size, a.common.seed);
  std::vector<uint64_t> steps(plan.stages.size(), 0), synthetic(plan.stages.size(), 0);
  uint64_t total = 0;
  while (auto b = sched.Next()) {
    batches << ToJson(*b, plan).dump() << "\n";
    ++steps[b->stage_index];
    synthetic[b->stage_index] += b->NumSynthetic();
    ++total;
  }
  batches.close();
  WriteConfig(a.out, json{{"subcommand", "schedule"},
                          {"seed", a.common.seed},
                          {"plan", a.plan},
                          {"batch_size", a.batch_size}});
  json stages = json::array();
  std::ostringstream text;
  text << "scheduled " << total << " batches of " << a.batch_size << "\n";
  for (size_t i = 0; i < plan.stages.size(); ++i) {
    stages.push_back({{"name", plan.stages[i].name}, {"steps", steps[i]}, {"synthetic_items", synthetic[i]}});
    text << plan.stages[i].name << ": " << steps[i] << " steps, " << synthetic[i] << " synthetic items\n";
  }
  Emit(out, a.common.json_output, json{{"batches", total}, {"stages", stages}}, text.str());
  return kExitOk;
}

// -------------------------------------------------------------------- evaluate

struct EvaluateArgs {
  CommonOptions common;
  std::string manifest, estimates, out;
  bool strict = false;
  bool csv = false;
};

inline json ToJson(const Aggregate &a) { return json{{"mean", a.mean}, {"median", a.median}}; }

inline json SummaryJson(const EvalReport &r) {
  return json{{"count", r.count},        {"missing", r.missing},     {"cap_db", r.cap_db},
              {"sdr_db", ToJson(r.sdr)}, {"isdr_db", ToJson(r.isdr)}, {"snr_loss_db", ToJson(r.snr_loss)}};
}

inline int RunEvaluate(const EvaluateArgs &a, std::ostream &out) {
  const Manifest manifest = ReadManifest(a.manifest);
  const EvalReport report = EvaluateManifest(manifest, fs::path(a.manifest).parent_path(), a.estimates,
                                             a.strict, a.common.workers);
  if (!report.missing.empty())
    Log()->warn("{} estimates missing (first: {})", report.missing.size(), report.missing.front());
  const json summary = SummaryJson(report);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::string rows;
    for (const auto &it : report.items)
      rows += json{{"id", it.id}, {"sdr_db", it.sdr_db}, {"isdr_db", it.isdr_db}, {"snr_loss_db", it.snr_loss_db}}
                  .dump() + "\n";
    WriteTextFile(fs::path(a.out) / "items.jsonl", rows);
    WriteTextFile(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
    if (a.csv) {
      std::ostringstream csv;
      csv.precision(17);
      csv << "id,sdr_db,isdr_db,snr_loss_db\n";
      for (const auto &it : report.items)
        csv << it.id << "," << it.sdr_db << "," << it.isdr_db << "," << it.snr_loss_db << "\n";
      WriteTextFile(fs::path(a.out) / "items.csv", csv.str());
    }
    WriteConfig(a.out, json{{"subcommand", "evaluate"},
                            {"manifest", a.manifest},
                            {"estimates", a.estimates},
                            {"strict", a.strict}});
  }
  std::ostringstream text;
  text << "evaluated " << report.count << " items";
  if (!report.missing.empty()) text << " (" << report.missing.size() << " missing)";
  text << "\nmean SDR " << report.sdr.mean << " dB, mean iSDR " << report.isdr.mean
       << " dB, median iSDR " << report.isdr.median << " dB\n";
  Emit(out, a.common.json_output, summary, text.str());
  return kExitOk;
}

// --------------------------------------------------------------------- inspect

struct InspectArgs {
  CommonOptions common;
  std::string path;
  bool audio = false;
};

inline int RunInspect(const InspectArgs &a, std::ostream &out) {
  const fs::path path(a.path);
  const std::string ext = path.extension().string();
  json summary;
  std::ostringstream text;
  if (ext == ".fmx") {
    const FeatureMatrix m = ReadFmx(path);
    summary = json{{"type", "fmx"}, {"rows", m.rows}, {"cols", m.cols}, {"valid", true}};
    text << path.string() << ": FMX1 " << m.rows << " x " << m.cols << ", valid\n";
  } else if (ext == ".wav") {
    const Waveform w = ReadWav(path);
    summary = json{{"type", "wav"}, {"samples", w.size()}, {"duration_s", w.duration_s()}};
    text << path.string() << ": " << w.size() << " samples, " << w.duration_s() << " s";
    try {
      const LevelReport level = ActiveSpeechLevel(w);
      summary["active_level_dbov"] = level.active_level_dbov;
      summary["activity_factor"] = level.activity_factor;
      text << ", active level " << level.active_level_dbov << " dBov, activity " << level.activity_factor;
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kSilentInput) throw;
      text << ", silent";
    }
    text << "\n";
  } else if (ext == ".json") {
    const CurriculumPlan plan = ReadPlan(path);
    json stages = json::array();
    text << path.string() << ": curriculum plan, threshold " << plan.threshold << ", stage-1 fraction "
         << plan.stage1_fraction << "\n";
    for (const auto &s : plan.stages) {
      stages.push_back({{"name", s.name}, {"items", s.item_ids.size()}, {"pools", s.synthetic_pool_ids}});
      text << "  " << s.name << ": " << s.item_ids.size() << " items\n";
    }
    summary = json{{"type", "plan"}, {"stage1_fraction", plan.stage1_fraction}, {"stages", stages}};
  } else {
    const Manifest manifest = ReadManifest(path);
    const ManifestStats st =
        SummarizeManifest(manifest, a.audio ? std::optional<fs::path>(path.parent_path()) : std::nullopt);
    summary = json{{"type", "manifest"},
                   {"count", st.count},
                   {"snr_mean_db", st.snr_mean_db},
                   {"snr_min_db", st.snr_min_db},
                   {"snr_max_db", st.snr_max_db},
                   {"snr_histogram", st.snr_histogram},
                   {"male_interferers", st.male_interferers},
                   {"female_interferers", st.female_interferers},
                   {"target_speakers", st.target_speakers},
                   {"interference_speakers", st.interference_speakers},
                   {"noisy_items", st.noisy_items}};
    if (a.audio) {
      summary["mixture_hours"] = st.mixture_seconds / 3600.0;
      summary["reference_hours"] = st.reference_seconds / 3600.0;
    }
    text << path.string() << ": " << st.count << " triplets\n"
         << "  SNR mean " << st.snr_mean_db << " dB, range [" << st.snr_min_db << ", " << st.snr_max_db << "]\n"
         << "  SNR histogram (1 dB bins from -5):";
    for (size_t c : st.snr_histogram) text << " " << c;
    text << "\n  interferer gender: " << st.male_interferers << " male, " << st.female_interferers << " female\n"
         << "  speakers: " << st.target_speakers << " target, " << st.interference_speakers << " interference\n";
    if (st.noisy_items) text << "  noisy mixtures: " << st.noisy_items << "\n";
    if (a.audio)
      text << "  mixture audio " << st.mixture_seconds / 3600.0 << " h, reference audio "
           << st.reference_seconds / 3600.0 << " h\n";
  }
  Emit(out, a.common.json_output, summary, text.str());
  return kExitOk;
}

// ------------------------------------------------------------------------- run

/// Entry point. Exit codes: 0 success, 1 usage/validation error, 2 runtime
/// error.
inline int Run(int argc, const char *const *argv, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  CLI::App app{"Target speaker extraction corpus, augmentation, curriculum and evaluation toolkit",
               "tse-forge"};
  app.require_subcommand(1);

  BuildCorpusArgs build;
  auto *build_cmd = app.add_subcommand("build-corpus", "Synthesize (mixture, reference, target) triplets");
  AddCommon(build_cmd, build.common);
  build_cmd->add_option("--targets", build.targets, "Target registry TSV")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--interferers", build.interferers, "Interferer registry TSV")
      ->required()
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build.out, "Output directory")->required();
  build_cmd->add_option("--segment-seconds", build.segment_seconds)->check(CLI::Range(0.1, 600.0));
  build_cmd->add_option("--level-dbov", build.level_dbov)->check(CLI::Range(-100.0, 0.0));
  build_cmd->add_option("--snr-min", build.snr_min)->check(CLI::Range(-60.0, 60.0));
  build_cmd->add_option("--snr-max", build.snr_max)->check(CLI::Range(-60.0, 60.0));
  build_cmd->add_option("--ref-min", build.ref_min, "Reference assembly stops at this length (s)")
      ->check(CLI::Range(0.1, 600.0));
  build_cmd->add_option("--ref-max", build.ref_max, "Reference truncation length (s)")->check(CLI::Range(0.1, 600.0));
  build_cmd->add_option("--min-duration", build.min_duration, "Drop target utterances shorter than this (s)")
      ->check(CLI::Range(0.0, 600.0));
  build_cmd->add_option("--min-utterances", build.min_utterances, "Drop speakers with fewer utterances")
      ->check(CLI::Range(size_t{2}, size_t{100000}));

  AugmentNoiseArgs noise;
  auto *noise_cmd = app.add_subcommand("augment-noise", "Add noise to mixtures with a fixed probability");
  AddCommon(noise_cmd, noise.common);
  noise_cmd->add_option("--manifest", noise.manifest)->required()->check(CLI::ExistingFile);
  noise_cmd->add_option("--noise-list", noise.noise_list, "Text file, one noise WAV per line")
      ->required()
      ->check(CLI::ExistingFile);
  noise_cmd->add_option("--out", noise.out)->required();
  noise_cmd->add_option("--prob", noise.probability)->check(CLI::Range(0.0, 1.0));
  noise_cmd->add_option("--noise-snr-min", noise.snr_min)->check(CLI::Range(-60.0, 60.0));
  noise_cmd->add_option("--noise-snr-max", noise.snr_max)->check(CLI::Range(-60.0, 60.0));

  SaltArgs salt;
  auto *salt_cmd = app.add_subcommand("salt-interp", "Latent interpolation of frame features (FMX1)");
  AddCommon(salt_cmd, salt.common);
  salt_cmd->add_option("--query", salt.queries, "Query FMX1 file(s)")->required()->check(CLI::ExistingFile);
  salt_cmd->add_option("--pool", salt.pools, "Reference speaker FMX1 file(s)")->check(CLI::ExistingFile);
  salt_cmd->add_option("--pool-dir", salt.pool_dir, "Directory of reference speaker FMX1 files")
      ->check(CLI::ExistingDirectory);
  salt_cmd->add_option("--out", salt.out)->required();
  salt_cmd->add_option("--k", salt.k, "Neighbours per frame")->check(CLI::Range(size_t{1}, size_t{100000}));
  salt_cmd->add_option("--p", salt.p, "Weight kept on the query")->check(CLI::Range(0.0, 1.0));
  salt_cmd->add_option("--N", salt.n, "Reference speakers per query")->check(CLI::Range(size_t{1}, size_t{100000}));

  PlanArgs plan;
  auto *plan_cmd = app.add_subcommand("plan-curriculum", "Partition data into similarity-graded stages");
  AddCommon(plan_cmd, plan.common);
  plan_cmd->add_option("--manifest", plan.manifest)->check(CLI::ExistingFile);
  plan_cmd->add_option("--embeddings", plan.embeddings, "Directory of <speaker_id>.fmx embeddings")
      ->check(CLI::ExistingDirectory);
  plan_cmd->add_option("--annotated", plan.annotated, "Manifest already annotated with sim")
      ->check(CLI::ExistingFile);
  plan_cmd->add_option("--out", plan.out)->required();
  plan_cmd->add_option("--threshold", plan.threshold)->check(CLI::Range(-0.999999, 0.999999));
  plan_cmd->add_option("--synth-ratio", plan.synth_ratio)->check(CLI::Range(0.0, 1.0));
  plan_cmd->add_option("--synth-pool", plan.synth_pools, "NAME=manifest.jsonl");
  plan_cmd->add_option("--total-steps", plan.total_steps)->check(CLI::Range(uint64_t{3}, uint64_t{1} << 40));
  plan_cmd->add_option("--stage-fractions", plan.fractions)->delimiter(',')->check(CLI::Range(0.0, 1.0));
  plan_cmd->add_option("--alternate", plan.alternate, "Pool set per synthetic stage, e.g. SALT or SynVox2+SALT");

  ScheduleArgs schedule;
  auto *schedule_cmd = app.add_subcommand("schedule", "Emit the batch stream for a curriculum plan");
  AddCommon(schedule_cmd, schedule.common);
  schedule_cmd->add_option("--plan", schedule.plan)->required()->check(CLI::ExistingFile);
  schedule_cmd->add_option("--batch-size", schedule.batch_size)->check(CLI::Range(size_t{1}, size_t{1} << 20));
  schedule_cmd->add_option("--out", schedule.out)->required();

  EvaluateArgs eval;
  auto *eval_cmd = app.add_subcommand("evaluate", "Score estimates: SDR, iSDR, negative-SNR loss");
  AddCommon(eval_cmd, eval.common);
  eval_cmd->add_option("--manifest", eval.manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--estimates", eval.estimates, "Directory of <id>.wav estimates")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", eval.out, "Write items.jsonl and summary.json here");
  eval_cmd->add_flag("--strict", eval.strict, "Fail on the first missing estimate");
  eval_cmd->add_flag("--csv", eval.csv, "Also write items.csv");

  InspectArgs inspect;
  auto *inspect_cmd = app.add_subcommand("inspect", "Statistics for a manifest, FMX1, WAV or plan file");
  AddCommon(inspect_cmd, inspect.common);
  inspect_cmd->add_option("path", inspect.path)->required()->check(CLI::ExistingFile);
  inspect_cmd->add_flag("--audio", inspect.audio, "Read audio to total durations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*build_cmd) return RunBuildCorpus(build, out);
    if (*noise_cmd) return RunAugmentNoise(noise, out);
    if (*salt_cmd) return RunSalt(salt, out);
    if (*plan_cmd) {
      plan.seed_given = plan_cmd->count("--seed") > 0;
      return RunPlan(plan, out);
    }
    if (*schedule_cmd) return RunSchedule(schedule, out);
    if (*eval_cmd) return RunEvaluate(eval, out);
    if (*inspect_cmd) return RunInspect(inspect, out);
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kExitValidation : kExitRuntime;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace tse::cli
