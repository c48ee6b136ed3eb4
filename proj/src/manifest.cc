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

#include "lightbeam/manifest.h"

#include <openssl/evp.h>
#include <sys/resource.h>

#include <fstream>
#include <memory>

#include "lightbeam/common.h"

namespace lightbeam {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const RunManifest& m) {
  ordered_json j;
  j["config"] = m.config;
  j["scorer"] = m.scorer;
  j["components"] = ordered_json::array();
  for (const auto& c : m.components) {
    j["components"].push_back({{"role", c.role}, {"path", c.path}, {"sha256", c.sha256}});
  }
  j["utterances"] = ordered_json::array();
  for (const auto& u : m.utterances) {
    ordered_json r;
    r["input"] = u.input;
    r["transcript"] = u.transcript;
    r["score"] = u.score;
    r["frames"] = u.frames;
    r["wall_time_s"] = u.wall_time_s;
    r["rtf"] = u.rtf;
    r["error"] = u.error ? ordered_json(*u.error) : ordered_json(nullptr);
    j["utterances"].push_back(std::move(r));
  }
  j["peak_rss_bytes"] = m.peak_rss_bytes ? ordered_json(*m.peak_rss_bytes) : ordered_json(nullptr);
  j["total_wall_time_s"] = m.total_wall_time_s;
  return j;
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.config = j.at("config");
    m.scorer = j.at("scorer").get<std::string>();
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("role").get<std::string>(), c.at("path").get<std::string>(),
                              c.at("sha256").get<std::string>()});
    }
    for (const auto& r : j.at("utterances")) {
      UtteranceRecord u;
      u.input = r.at("input").get<std::string>();
      u.transcript = r.at("transcript").get<std::string>();
      u.score = r.at("score").get<double>();
      u.frames = r.at("frames").get<std::size_t>();
      u.wall_time_s = r.at("wall_time_s").get<double>();
      u.rtf = r.at("rtf").get<double>();
      if (r.contains("error") && !r["error"].is_null()) u.error = r["error"].get<std::string>();
      m.utterances.push_back(std::move(u));
    }
    if (j.contains("peak_rss_bytes") && !j["peak_rss_bytes"].is_null()) {
      m.peak_rss_bytes = j["peak_rss_bytes"].get<std::uint64_t>();
    }
    m.total_wall_time_s = j.value("total_wall_time_s", 0.0);
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json strip_timing(json manifest) {
  manifest.erase("total_wall_time_s");
  manifest.erase("peak_rss_bytes");
  if (manifest.contains("utterances")) {
    for (auto& u : manifest["utterances"]) {
      u.erase("wall_time_s");
      u.erase("rtf");
    }
  }
  return manifest;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::optional<std::uint64_t> peak_rss_bytes() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return std::nullopt;
  // Linux reports kilobytes.
  return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024;
}

}  // namespace lightbeam
