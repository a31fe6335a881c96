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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tse_forge/error.hpp"

namespace tse {

/// One (mixture, reference, target) triplet. Paths are relative to the
/// directory holding the manifest.
struct ManifestEntry {
  std::string id;
  std::string mixture_path;
  std::string target_path;
  std::string reference_path;
  std::string target_speaker;
  std::string interference_speaker;
  std::string interference_gender;
  double snr_db = 0.0;
  double alpha = 1.0;
  std::optional<std::string> noise_path;
  std::optional<double> noise_snr_db;
  uint64_t item_seed = 0;

  bool operator==(const ManifestEntry &) const = default;
};

using Manifest = std::vector<ManifestEntry>;

inline nlohmann::ordered_json ToJson(const ManifestEntry &e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["mixture_path"] = e.mixture_path;
  j["target_path"] = e.target_path;
  j["reference_path"] = e.reference_path;
  j["target_speaker"] = e.target_speaker;
  j["interference_speaker"] = e.interference_speaker;
  j["interference_gender"] = e.interference_gender;
  j["snr_db"] = e.snr_db;
  j["alpha"] = e.alpha;
  j["noise_path"] = e.noise_path ? nlohmann::ordered_json(*e.noise_path) : nlohmann::ordered_json(nullptr);
  j["noise_snr_db"] = e.noise_snr_db ? nlohmann::ordered_json(*e.noise_snr_db) : nlohmann::ordered_json(nullptr);
  j["item_seed"] = e.item_seed;
  return j;
}

inline ManifestEntry ManifestEntryFromJson(const nlohmann::json &j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  e.mixture_path = j.at("mixture_path").get<std::string>();
  e.target_path = j.at("target_path").get<std::string>();
  e.reference_path = j.at("reference_path").get<std::string>();
  e.target_speaker = j.at("target_speaker").get<std::string>();
  e.interference_speaker = j.at("interference_speaker").get<std::string>();
  e.interference_gender = j.at("interference_gender").get<std::string>();
  e.snr_db = j.at("snr_db").get<double>();
  e.alpha = j.at("alpha").get<double>();
  if (j.contains("noise_path") && !j["noise_path"].is_null())
    e.noise_path = j["noise_path"].get<std::string>();
  if (j.contains("noise_snr_db") && !j["noise_snr_db"].is_null())
    e.noise_snr_db = j["noise_snr_db"].get<double>();
  e.item_seed = j.at("item_seed").get<uint64_t>();
  return e;
}

inline std::string SerializeManifest(const Manifest &manifest) {
  std::string out;
  for (const auto &e : manifest) {
    out += ToJson(e).dump();
    out += '\n';
  }
  return out;
}

inline void WriteTextFile(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot create " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

inline void WriteManifest(const std::filesystem::path &path, const Manifest &manifest) {
  WriteTextFile(path, SerializeManifest(manifest));
}

/// Reads JSON-lines; blank lines are ignored.
template <typename Entry, typename Parse>
std::vector<Entry> ReadJsonLines(const std::filesystem::path &path, Parse &&parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  std::vector<Entry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      entries.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorCode::kParseError,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

inline Manifest ReadManifest(const std::filesystem::path &path) {
  return ReadJsonLines<ManifestEntry>(path, ManifestEntryFromJson);
}

}  // namespace tse
