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

#include "lightbeam/frontio.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lightbeam {

static_assert(std::endian::native == std::endian::little,
              "LBLT I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kLogitsMagic = {'L', 'B', 'L', 'T'};
constexpr std::uint32_t kLogitsVersion = 1;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T read_pod(const std::string& buf, std::size_t& pos, const std::string& what) {
  if (pos + sizeof(T) > buf.size()) throw FormatError("truncated " + what);
  T value;
  std::memcpy(&value, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

RawLogits parse_lblt(const std::string& buf, const std::string& name) {
  std::size_t pos = 4;
  auto version = read_pod<std::uint32_t>(buf, pos, name);
  if (version != kLogitsVersion) {
    throw FormatError(name + ": unsupported LBLT version " + std::to_string(version));
  }
  auto rows = read_pod<std::uint32_t>(buf, pos, name);
  auto cols = read_pod<std::uint32_t>(buf, pos, name);
  RawLogits out;
  out.frame_duration_ms = read_pod<float>(buf, pos, name);
  std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (buf.size() - pos != count * sizeof(float)) {
    throw FormatError(name + ": payload size does not match header");
  }
  out.frames = Matrix<float>(rows, cols);
  std::memcpy(out.frames.data().data(), buf.data() + pos, count * sizeof(float));
  return out;
}

RawLogits parse_json_logits(const std::string& buf, const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("logits") || !j.contains("frame_duration_ms")) {
    throw FormatError(name + ": expected keys frame_duration_ms and logits");
  }
  const auto& rows = j["logits"];
  if (!rows.is_array()) throw FormatError(name + ": logits must be an array");
  RawLogits out;
  out.frame_duration_ms = j["frame_duration_ms"].get<float>();
  std::size_t cols = rows.empty() ? 0 : rows[0].size();
  out.frames = Matrix<float>(rows.size(), cols);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (!rows[t].is_array() || rows[t].size() != cols) {
      throw ShapeError(name + ": ragged logits row " + std::to_string(t));
    }
    for (std::size_t v = 0; v < cols; ++v) {
      const auto& cell = rows[t][v];
      if (cell.is_null()) throw ValueError(name + ": non-finite logit");
      if (!cell.is_number()) throw FormatError(name + ": non-numeric logit");
      out.frames(t, v) = cell.get<float>();
    }
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::optional<TokenId> blank, space;
  for (TokenId i = 0; i < tokens_.size(); ++i) {
    const auto& tok = tokens_[i];
    if (tok.empty()) throw FormatError("empty token at line " + std::to_string(i + 1));
    if (!index_.emplace(tok, i).second) {
      throw FormatError("duplicate token '" + tok + "' at line " + std::to_string(i + 1));
    }
    if (tok == kBlankToken) blank = i;
    if (tok == kSpaceToken) space = i;
  }
  if (!blank) throw FormatError("vocabulary lacks the reserved token <blank>");
  if (!space) throw FormatError("vocabulary lacks the reserved token <sp>");
  if (tokens_.size() < 3) throw FormatError("vocabulary needs at least one phoneme");
  blank_id_ = *blank;
  space_id_ = *space;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  // A trailing newline is not an empty token.
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return Vocabulary(std::move(tokens));
}

RawLogits load_logits(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::string buf = read_file(path);
  std::string name = path.string();
  RawLogits out;
  if (buf.size() >= 4 && std::equal(kLogitsMagic.begin(), kLogitsMagic.end(), buf.begin())) {
    out = parse_lblt(buf, name);
  } else {
    auto first = buf.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || buf[first] != '{') {
      throw FormatError(name + ": bad magic (expected LBLT or JSON)");
    }
    out = parse_json_logits(buf, name);
  }
  if (out.frames.cols() != vocab.size()) {
    throw ShapeError(name + ": stored V=" + std::to_string(out.frames.cols()) +
                     " but vocabulary has " + std::to_string(vocab.size()) + " tokens");
  }
  if (!(out.frame_duration_ms > 0.0f) || !std::isfinite(out.frame_duration_ms)) {
    throw ValueError(name + ": frame_duration_ms must be positive");
  }
  for (float x : out.frames.data()) {
    if (!std::isfinite(x)) throw ValueError(name + ": non-finite logit");
  }
  return out;
}

void save_logits(const std::filesystem::path& path, const RawLogits& logits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  auto rows = static_cast<std::uint32_t>(logits.frames.rows());
  auto cols = static_cast<std::uint32_t>(logits.frames.cols());
  out.write(kLogitsMagic.data(), kLogitsMagic.size());
  out.write(reinterpret_cast<const char*>(&kLogitsVersion), sizeof(kLogitsVersion));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(&logits.frame_duration_ms), sizeof(float));
  out.write(reinterpret_cast<const char*>(logits.frames.data().data()),
            static_cast<std::streamsize>(logits.frames.data().size() * sizeof(float)));
  if (!out) throw FormatError("write failed for " + path.string());
}

LogProbMatrix scale_log_softmax(const RawLogits& raw, double acoustic_scale) {
  if (!(acoustic_scale > 0.0) || !std::isfinite(acoustic_scale)) {
    throw ConfigError("acoustic_scale must be positive");
  }
  LogProbMatrix out{Matrix<double>(raw.frames.rows(), raw.frames.cols())};
  for (std::size_t t = 0; t < raw.frames.rows(); ++t) {
    auto in = raw.frames.row(t);
    double peak = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (float x : in) sum += std::exp(static_cast<double>(x) - peak);
    double lse = peak + std::log(sum);
    auto row = out.frames.row(t);
    for (std::size_t v = 0; v < in.size(); ++v) {
      row[v] = acoustic_scale * (static_cast<double>(in[v]) - lse);
    }
  }
  return out;
}

void DecodeConfig::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(acoustic_scale > 0.0) || !finite(acoustic_scale)) {
    throw ConfigError("acoustic_scale must be positive");
  }
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (ortho_beams < 1) throw ConfigError("ortho_beams must be >= 1");
  if (!(beam_prune_threshold > 0.0) || !finite(beam_prune_threshold)) {
    throw ConfigError("beam_prune_threshold must be positive");
  }
  if (!(homophone_prune_threshold >= 0.0) || !finite(homophone_prune_threshold)) {
    throw ConfigError("homophone_prune_threshold must be nonnegative");
  }
  if (!finite(token_insertion_bonus) || !finite(word_boundary_bonus)) {
    throw ConfigError("bonuses must be finite");
  }
  if (!(ngram_weight >= 0.0) || !finite(ngram_weight)) {
    throw ConfigError("ngram_weight must be nonnegative");
  }
  if (!(llm_weight >= 0.0) || !finite(llm_weight)) {
    throw ConfigError("llm_weight must be nonnegative");
  }
  if (llm_rescore_interval < 1) throw ConfigError("llm_rescore_interval must be >= 1");
  if (llm_chunk_size < 1) throw ConfigError("llm_chunk_size must be >= 1");
}

DecodeConfig DecodeConfig::b2t24() {
  DecodeConfig c;
  c.llm_rescore_interval = 10;
  c.llm_weight = 1.2;
  c.ngram_weight = 0.8;
  c.acoustic_scale = 0.6;
  c.beam_size = 1000;
  c.beam_prune_threshold = 22.0;
  c.ortho_beams = 3;
  c.homophone_prune_threshold = 4.0;
  c.token_insertion_bonus = 1.5;
  c.word_boundary_bonus = 1.0;
  c.llm_chunk_size = 256;
  return c;
}

DecodeConfig DecodeConfig::b2t25() {
  DecodeConfig c;
  c.llm_rescore_interval = 15;
  c.llm_weight = 1.2;
  c.ngram_weight = 1.0;
  c.acoustic_scale = 0.4;
  c.beam_size = 900;
  c.beam_prune_threshold = 18.0;
  c.ortho_beams = 3;
  c.homophone_prune_threshold = 4.0;
  c.token_insertion_bonus = 1.5;
  c.word_boundary_bonus = 1.0;
  c.llm_chunk_size = 256;
  return c;
}

DecodeConfig DecodeConfig::profile(std::string_view name) {
  if (name == "b2t24") return b2t24();
  if (name == "b2t25") return b2t25();
  throw ConfigError("unknown profile '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const DecodeConfig& c) {
  nlohmann::ordered_json j;
  j["acoustic_scale"] = c.acoustic_scale;
  j["beam_size"] = c.beam_size;
  j["ortho_beams"] = c.ortho_beams;
  j["beam_prune_threshold"] = c.beam_prune_threshold;
  j["homophone_prune_threshold"] = c.homophone_prune_threshold;
  j["token_insertion_bonus"] = c.token_insertion_bonus;
  j["word_boundary_bonus"] = c.word_boundary_bonus;
  j["ngram_weight"] = c.ngram_weight;
  j["llm_weight"] = c.llm_weight;
  j["llm_rescore_interval"] = c.llm_rescore_interval;
  j["llm_chunk_size"] = c.llm_chunk_size;
  return j;
}

DecodeConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  DecodeConfig c;
  if (j.contains("profile")) c = DecodeConfig::profile(j["profile"].get<std::string>());
  auto set_double = [&](const char* key, double& field) {
    if (j.contains(key)) field = j[key].get<double>();
  };
  auto set_int = [&](const char* key, int& field) {
    if (j.contains(key)) field = j[key].get<int>();
  };
  try {
    for (const auto& [key, _] : j.items()) {
      static const std::array<std::string_view, 12> known = {
          "profile", "acoustic_scale", "beam_size", "ortho_beams", "beam_prune_threshold",
          "homophone_prune_threshold", "token_insertion_bonus", "word_boundary_bonus",
          "ngram_weight", "llm_weight", "llm_rescore_interval", "llm_chunk_size"};
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    set_double("acoustic_scale", c.acoustic_scale);
    set_int("beam_size", c.beam_size);
    set_int("ortho_beams", c.ortho_beams);
    set_double("beam_prune_threshold", c.beam_prune_threshold);
    set_double("homophone_prune_threshold", c.homophone_prune_threshold);
    set_double("token_insertion_bonus", c.token_insertion_bonus);
    set_double("word_boundary_bonus", c.word_boundary_bonus);
    set_double("ngram_weight", c.ngram_weight);
    set_double("llm_weight", c.llm_weight);
    set_int("llm_rescore_interval", c.llm_rescore_interval);
    set_int("llm_chunk_size", c.llm_chunk_size);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

DecodeConfig load_config(const std::filesystem::path& path) {
  std::string text = read_file(path);
  try {
    return config_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace lightbeam
