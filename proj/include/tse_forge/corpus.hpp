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

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tse_forge/audio_io.hpp"
#include "tse_forge/error.hpp"
#include "tse_forge/level.hpp"
#include "tse_forge/manifest.hpp"
#include "tse_forge/mixing.hpp"
#include "tse_forge/parallel.hpp"
#include "tse_forge/rng.hpp"

namespace tse {

enum class Gender { kMale, kFemale };

inline std::string_view GenderName(Gender g) { return g == Gender::kMale ? "male" : "female"; }

inline std::optional<Gender> ParseGender(std::string_view s) {
  if (s == "male" || s == "m" || s == "M") return Gender::kMale;
  if (s == "female" || s == "f" || s == "F") return Gender::kFemale;
  return std::nullopt;
}

struct UtteranceRecord {
  std::string utt_id;
  std::string speaker_id;
  Gender gender = Gender::kMale;
  std::filesystem::path path;
  double duration_s = 0.0;

  bool operator==(const UtteranceRecord &) const = default;
};

struct Registry {
  std::vector<UtteranceRecord> records;

  size_t size() const { return records.size(); }
  size_t NumSpeakers() const {
    std::unordered_set<std::string> s;
    for (const auto &r : records) s.insert(r.speaker_id);
    return s.size();
  }
};

inline constexpr std::string_view kRegistryHeader = "utt_id\tspeaker_id\tgender\tpath\tduration_s";

namespace detail {

inline std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace detail

/// Parses a registry TSV. Relative audio paths resolve against the
/// registry's own directory.
inline Registry ParseRegistry(std::istream &in, const std::filesystem::path &base_dir,
                              const std::string &name = "<registry>") {
  auto parse_error = [&](size_t line_no, const std::string &why) {
    return Error(ErrorCode::kParseError, name + " line " + std::to_string(line_no) + ": " + why);
  };
  Registry reg;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kRegistryHeader)
        throw parse_error(line_no, "expected header '" + std::string(kRegistryHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto f = detail::SplitTabs(line);
    if (f.size() != 5)
      throw parse_error(line_no, "expected 5 columns, found " + std::to_string(f.size()));
    UtteranceRecord r;
    r.utt_id = f[0];
    r.speaker_id = f[1];
    if (r.utt_id.empty() || r.speaker_id.empty()) throw parse_error(line_no, "empty id");
    const auto gender = ParseGender(f[2]);
    if (!gender) throw parse_error(line_no, "gender '" + f[2] + "' is not male/female");
    r.gender = *gender;
    if (f[3].empty()) throw parse_error(line_no, "empty path");
    std::filesystem::path p(f[3]);
    r.path = p.is_absolute() ? p : (base_dir / p).lexically_normal();
    const char *first = f[4].data();
    const char *last = first + f[4].size();
    auto [ptr, ec] = std::from_chars(first, last, r.duration_s);
    if (ec != std::errc() || ptr != last || !(r.duration_s > 0.0))
      throw parse_error(line_no, "duration_s '" + f[4] + "' is not a positive number");
    if (!seen.insert(r.utt_id).second)
      throw Error(ErrorCode::kDuplicateId, name + " line " + std::to_string(line_no) + ": " + r.utt_id);
    reg.records.push_back(std::move(r));
  }
  if (!header_seen) throw parse_error(line_no, "missing header row");
  return reg;
}

inline Registry LoadRegistry(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  return ParseRegistry(in, path.parent_path(), path.string());
}

inline std::string SerializeRegistry(const Registry &reg) {
  std::ostringstream out;
  out << kRegistryHeader << '\n';
  for (const auto &r : reg.records) {
    char dur[32];
    std::snprintf(dur, sizeof(dur), "%.6f", r.duration_s);
    out << r.utt_id << '\t' << r.speaker_id << '\t' << GenderName(r.gender) << '\t'
        << r.path.generic_string() << '\t' << dur << '\n';
  }
  return out.str();
}

struct FilterRules {
  double min_duration_s = 2.0;
  size_t min_utterances = 3;
};

struct FilterReport {
  size_t input_utterances = 0;
  size_t input_speakers = 0;
  size_t short_utterances_dropped = 0;
  size_t speakers_dropped = 0;
  size_t utterances_of_dropped_speakers = 0;
  size_t kept_utterances = 0;
  size_t kept_speakers = 0;
};

/// Drops short utterances, then speakers left with too few utterances.
inline std::pair<Registry, FilterReport> FilterTargets(const Registry &reg, FilterRules rules = {}) {
  FilterReport report;
  report.input_utterances = reg.size();
  report.input_speakers = reg.NumSpeakers();

  std::vector<const UtteranceRecord *> long_enough;
  std::unordered_map<std::string, size_t> per_speaker;
  for (const auto &r : reg.records) {
    if (r.duration_s < rules.min_duration_s) {
      ++report.short_utterances_dropped;
      continue;
    }
    long_enough.push_back(&r);
    ++per_speaker[r.speaker_id];
  }

  Registry out;
  std::unordered_set<std::string> dropped;
  for (const auto *r : long_enough) {
    if (per_speaker[r->speaker_id] < rules.min_utterances) {
      dropped.insert(r->speaker_id);
      ++report.utterances_of_dropped_speakers;
      continue;
    }
    out.records.push_back(*r);
  }
  // Speakers whose every utterance was short vanish in the first rule.
  report.kept_utterances = out.size();
  report.kept_speakers = out.NumSpeakers();
  report.speakers_dropped = report.input_speakers - report.kept_speakers;
  if (out.records.empty()) throw Error(ErrorCode::kEmptyResult, "no target utterance survived filtering");
  return {std::move(out), report};
}

struct PairItem {
  size_t target_index = 0;  // into PairPlan::targets
  UtteranceRecord interferer;
  Gender requested_gender = Gender::kMale;
};

struct PairPlan {
  Registry targets;
  std::vector<PairItem> items;
};

/// One interferer per target utterance, alternating male (even k) and
/// female (odd k), uniform among that gender's utterances from other
/// speakers.
inline PairPlan PlanPairs(const Registry &targets, const Registry &interferers, SeededRng &rng) {
  std::vector<size_t> by_gender[2];
  std::map<std::pair<int, std::string>, size_t> speaker_gender_count;
  for (size_t i = 0; i < interferers.size(); ++i) {
    const auto &r = interferers.records[i];
    by_gender[static_cast<int>(r.gender)].push_back(i);
    ++speaker_gender_count[{static_cast<int>(r.gender), r.speaker_id}];
  }
  for (Gender g : {Gender::kMale, Gender::kFemale})
    if (by_gender[static_cast<int>(g)].empty())
      throw Error(ErrorCode::kMissingGender, "interferer registry has no " + std::string(GenderName(g)) + " utterances");

  PairPlan plan;
  plan.targets = targets;
  plan.items.reserve(targets.size());
  for (size_t k = 0; k < targets.size(); ++k) {
    const auto &target = targets.records[k];
    const Gender gender = k % 2 == 0 ? Gender::kMale : Gender::kFemale;
    const auto &pool = by_gender[static_cast<int>(gender)];
    const auto same = speaker_gender_count.find({static_cast<int>(gender), target.speaker_id});
    if (same != speaker_gender_count.end() && same->second == pool.size())
      throw Error(ErrorCode::kEmptyResult, "no " + std::string(GenderName(gender)) +
                                               " interferer differs from speaker " + target.speaker_id);
    size_t pick;
    do {
      pick = pool[rng.UniformIndex(pool.size())];
    } while (interferers.records[pick].speaker_id == target.speaker_id);
    plan.items.push_back({k, interferers.records[pick], gender});
  }
  return plan;
}

struct CorpusConfig {
  uint64_t global_seed = 0;
  size_t workers = 1;
  double segment_seconds = 6.0;
  double level_dbov = -26.0;
  SnrRange snr{-5.0, 5.0};
  ReferenceLimits reference{};
};

inline void Validate(const CorpusConfig &cfg) {
  if (cfg.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  if (!(cfg.segment_seconds > 0)) throw Error(ErrorCode::kInvalidArgument, "segment length must be > 0");
  if (!(cfg.snr.lo <= cfg.snr.hi)) throw Error(ErrorCode::kInvalidArgument, "snr range is empty");
  if (!(cfg.reference.min_seconds > 0 && cfg.reference.min_seconds <= cfg.reference.max_seconds))
    throw Error(ErrorCode::kInvalidArgument, "reference limits must satisfy 0 < min <= max");
}

/// Stable per-item seed: depends only on the global seed and the pair keys.
inline uint64_t ItemSeed(uint64_t global_seed, const std::string &target_utt,
                         const std::string &interferer_utt) {
  return DeriveSeed(global_seed, target_utt, interferer_utt);
}

inline std::string ItemId(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

/// Uniform choice among the full (unpadded) segments that are not silent.
/// The zero-padded tail is used only when it is the sole segment.
inline Waveform PickSegment(Segmentation segs, SeededRng &rng, const std::string &what) {
  size_t usable = segs.segments.size();
  if (segs.trailing_padding > 0 && usable > 1) --usable;
  std::vector<size_t> voiced;
  for (size_t i = 0; i < usable; ++i)
    if (MeanPower(segs.segments[i]) > 0.0) voiced.push_back(i);
  if (voiced.empty()) throw Error(ErrorCode::kZeroEnergy, what + " has no non-silent segment");
  return std::move(segs.segments[voiced[rng.UniformIndex(voiced.size())]]);
}

inline Waveform LoadNormalized(const std::filesystem::path &path, double level_dbov) {
  return NormalizeTo(ReadWav(path), level_dbov).first;
}

/// Audio for one plan item, before it is written.
struct RenderedItem {
  Waveform mixture;
  Waveform target;
  Waveform reference;
  ManifestEntry entry;
};

/// Deterministic rendering of plan item `index`; all randomness comes from
/// the item seed.
inline RenderedItem RenderItem(const PairPlan &plan, size_t index, const CorpusConfig &cfg,
                               const std::unordered_map<std::string, std::vector<size_t>> &by_speaker) {
  const PairItem &item = plan.items[index];
  const UtteranceRecord &target = plan.targets.records[item.target_index];
  RenderedItem out;
  ManifestEntry &e = out.entry;
  e.id = ItemId(index);
  e.item_seed = ItemSeed(cfg.global_seed, target.utt_id, item.interferer.utt_id);
  SeededRng rng(e.item_seed);

  try {
    const Waveform s_full = LoadNormalized(target.path, cfg.level_dbov);
    out.target = PickSegment(Segment(s_full, cfg.segment_seconds, rng), rng, "target");

    const Waveform i_full = LoadNormalized(item.interferer.path, cfg.level_dbov);
    const Waveform interference = PickSegment(Segment(i_full, cfg.segment_seconds, rng), rng, "interference");

    const double snr_db = cfg.snr.Sample(rng);
    auto [mixture, spec] = Mix(out.target, interference, snr_db);
    out.mixture = std::move(mixture);

    std::vector<size_t> others;
    for (size_t idx : by_speaker.at(target.speaker_id))
      if (idx != item.target_index) others.push_back(idx);
    if (others.empty())
      throw Error(ErrorCode::kEmptyResult, "speaker " + target.speaker_id + " has no enrollment utterance");
    out.reference = BuildReferenceFrom(
        others.size(),
        [&](size_t i) { return LoadNormalized(plan.targets.records[others[i]].path, cfg.level_dbov); },
        rng, cfg.reference);

    e.mixture_path = "mix/" + e.id + ".wav";
    e.target_path = "target/" + e.id + ".wav";
    e.reference_path = "ref/" + e.id + ".wav";
    e.target_speaker = target.speaker_id;
    e.interference_speaker = item.interferer.speaker_id;
    e.interference_gender = std::string(GenderName(item.interferer.gender));
    e.snr_db = spec.snr_db;
    e.alpha = spec.alpha;
  } catch (const Error &err) {
    RethrowWithContext(err, "item " + e.id + " (" + target.utt_id + " + " + item.interferer.utt_id + ")");
  }
  return out;
}

struct CorpusReport {
  Manifest manifest;
  size_t clipped_samples = 0;
};

/// Renders every plan item into out_dir/{mix,target,ref}/<id>.wav and
/// writes out_dir/manifest.jsonl in plan order. On failure the partial
/// output is removed.
inline CorpusReport BuildCorpus(const PairPlan &plan, const CorpusConfig &cfg,
                                const std::filesystem::path &out_dir) {
  namespace fs = std::filesystem;
  Validate(cfg);
  std::unordered_map<std::string, std::vector<size_t>> by_speaker;
  for (size_t i = 0; i < plan.targets.size(); ++i)
    by_speaker[plan.targets.records[i].speaker_id].push_back(i);

  const fs::path subdirs[] = {out_dir / "mix", out_dir / "target", out_dir / "ref"};
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto &d : subdirs) fs::remove_all(d, ec);
    fs::remove(out_dir / "manifest.jsonl", ec);
  };

  CorpusReport report;
  report.manifest.resize(plan.items.size());
  std::vector<size_t> clipped(plan.items.size(), 0);
  try {
    for (const auto &d : subdirs) fs::create_directories(d);
    ParallelFor(plan.items.size(), cfg.workers, [&](size_t i) {
      RenderedItem item = RenderItem(plan, i, cfg, by_speaker);
      const auto &e = item.entry;
      try {
        clipped[i] += WriteWav(out_dir / e.mixture_path, item.mixture).clipped;
        clipped[i] += WriteWav(out_dir / e.target_path, item.target).clipped;
        clipped[i] += WriteWav(out_dir / e.reference_path, item.reference).clipped;
      } catch (const Error &err) {
        RethrowWithContext(err, "item " + e.id);
      }
      report.manifest[i] = std::move(item.entry);
    });
    WriteManifest(out_dir / "manifest.jsonl", report.manifest);
  } catch (...) {
    cleanup();
    throw;
  }
  for (size_t c : clipped) report.clipped_samples += c;
  return report;
}

struct ManifestStats {
  size_t count = 0;
  double snr_mean_db = 0.0;
  double snr_min_db = 0.0;
  double snr_max_db = 0.0;
  std::vector<size_t> snr_histogram;  // 1 dB bins over [-5, 5)
  size_t male_interferers = 0;
  size_t female_interferers = 0;
  size_t target_speakers = 0;
  size_t interference_speakers = 0;
  size_t noisy_items = 0;
  double mixture_seconds = 0.0;  // 0 when audio is not inspected
  double reference_seconds = 0.0;
};

/// Table-style corpus statistics. When `base_dir` is given the mixture and
/// reference durations are read from the audio.
inline ManifestStats SummarizeManifest(const Manifest &manifest,
                                       const std::optional<std::filesystem::path> &base_dir = {}) {
  ManifestStats st;
  st.count = manifest.size();
  st.snr_histogram.assign(10, 0);
  std::set<std::string> targets, interferers;
  double sum = 0.0;
  for (size_t i = 0; i < manifest.size(); ++i) {
    const auto &e = manifest[i];
    sum += e.snr_db;
    if (i == 0 || e.snr_db < st.snr_min_db) st.snr_min_db = e.snr_db;
    if (i == 0 || e.snr_db > st.snr_max_db) st.snr_max_db = e.snr_db;
    const auto bin = static_cast<long>(std::floor(e.snr_db + 5.0));
    st.snr_histogram[static_cast<size_t>(std::clamp(bin, 0L, 9L))]++;
    if (e.interference_gender == "male") ++st.male_interferers;
    if (e.interference_gender == "female") ++st.female_interferers;
    if (e.noise_path) ++st.noisy_items;
    targets.insert(e.target_speaker);
    interferers.insert(e.interference_speaker);
    if (base_dir) {
      st.mixture_seconds += ReadWav(*base_dir / e.mixture_path).duration_s();
      st.reference_seconds += ReadWav(*base_dir / e.reference_path).duration_s();
    }
  }
  st.snr_mean_db = manifest.empty() ? 0.0 : sum / static_cast<double>(manifest.size());
  st.target_speakers = targets.size();
  st.interference_speakers = interferers.size();
  return st;
}

/// Reads a list of file paths, one per line; relative entries resolve
/// against the list's directory.
inline std::vector<std::filesystem::path> ReadPathList(const std::filesystem::path &list) {
  std::ifstream in(list);
  if (!in) throw Error(ErrorCode::kNotFound, list.string());
  std::vector<std::filesystem::path> paths;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::filesystem::path p(line);
    paths.push_back(p.is_absolute() ? p : (list.parent_path() / p).lexically_normal());
  }
  return paths;
}

struct NoiseAugmentReport {
  Manifest manifest;
  size_t applied = 0;
  size_t clipped_samples = 0;
};

/// Dynamic noise augmentation over a built corpus. Every mixture is copied
/// (or noised) into out_dir/mix/<id>.wav; target and reference paths are
/// rewritten relative to out_dir. Item randomness derives from (seed, id).
inline NoiseAugmentReport AugmentCorpus(const Manifest &manifest,
                                        const std::filesystem::path &manifest_dir,
                                        const std::vector<std::filesystem::path> &noise_paths,
                                        const NoiseConfig &cfg, uint64_t seed, size_t workers,
                                        const std::filesystem::path &out_dir) {
  namespace fs = std::filesystem;
  if (noise_paths.empty()) throw Error(ErrorCode::kEmptyPool, "noise list is empty");
  if (!(cfg.probability >= 0.0 && cfg.probability <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "noise probability must be in [0,1]");
  std::vector<Waveform> pool;
  pool.reserve(noise_paths.size());
  for (const auto &p : noise_paths) pool.push_back(ReadWav(p));

  const fs::path mix_dir = out_dir / "mix";
  const fs::path abs_out = fs::absolute(out_dir);
  NoiseAugmentReport report;
  report.manifest.resize(manifest.size());
  std::vector<size_t> clipped(manifest.size(), 0);
  std::vector<char> applied(manifest.size(), 0);
  try {
    fs::create_directories(mix_dir);
    ParallelFor(manifest.size(), workers, [&](size_t i) {
      ManifestEntry e = manifest[i];
      try {
        SeededRng rng(DeriveSeed(seed, "noise", e.id));
        const Waveform m = ReadWav(manifest_dir / e.mixture_path);
        auto [noisy, delta] = AugmentNoise(m, pool, rng, cfg);
        auto rebase = [&](const std::string &rel) {
          return fs::absolute(manifest_dir / rel).lexically_normal().lexically_relative(abs_out).generic_string();
        };
        e.target_path = rebase(e.target_path);
        e.reference_path = rebase(e.reference_path);
        e.mixture_path = "mix/" + e.id + ".wav";
        if (delta.applied) {
          e.noise_path = noise_paths[delta.clip_index].generic_string();
          e.noise_snr_db = delta.snr_db;
          applied[i] = 1;
        } else {
          e.noise_path.reset();
          e.noise_snr_db.reset();
        }
        clipped[i] = WriteWav(out_dir / e.mixture_path, noisy).clipped;
      } catch (const Error &err) {
        RethrowWithContext(err, "item " + e.id);
      }
      report.manifest[i] = std::move(e);
    });
    WriteManifest(out_dir / "manifest.jsonl", report.manifest);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(mix_dir, ec);
    fs::remove(out_dir / "manifest.jsonl", ec);
    throw;
  }
  for (size_t i = 0; i < manifest.size(); ++i) {
    report.clipped_samples += clipped[i];
    report.applied += applied[i];
  }
  return report;
}

}  // namespace tse
