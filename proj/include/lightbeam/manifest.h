// Copyright (c) 2026 LightBeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace lightbeam {

struct UtteranceRecord {
  std::string input;
  std::string transcript;
  double score = 0.0;
  std::size_t frames = 0;
  double wall_time_s = 0.0;
  double rtf = 0.0;
  std::optional<std::string> error;
};

struct ComponentFile {
  std::string role;  // "vocab", "lexicon", "table", "arpa", ...
  std::string path;
  std::string sha256;
};

/// Everything needed to audit or repeat one decode run.
struct RunManifest {
  nlohmann::ordered_json config;
  std::string scorer = "none";
  std::vector<ComponentFile> components;
  std::vector<UtteranceRecord> utterances;
  std::optional<std::uint64_t> peak_rss_bytes;
  double total_wall_time_s = 0.0;
};

nlohmann::ordered_json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);

/// Drops the fields that legitimately differ between identical runs:
/// wall times, RTF and peak memory.
nlohmann::json strip_timing(nlohmann::json manifest);

/// Lowercase hex SHA-256 of a file's bytes. Throws FormatError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Peak resident set size of this process, when the platform reports it.
std::optional<std::uint64_t> peak_rss_bytes();

}  // namespace lightbeam
